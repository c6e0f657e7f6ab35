pub mod acceptance;
pub mod error;
pub mod exponent;
pub mod library;
pub mod model;
pub mod modelfile;
pub mod oracle;
mod par;
pub mod inversion;
pub mod rearrangement;
pub mod diagnostics;
pub mod asymptotics;
pub mod ratio_limit;
pub mod quad;
pub mod radial;
pub mod specfun;

pub use error::{Error, Result};
pub use exponent::{eval_psi, eval_psi_turns, eval_re_psi, g_inverse, iso_g, quadratic_majorant, radial_g};
pub use model::{Atom, AtomLadder, AtomSet, MassRule, MeasureSpec, ModelSpec, RadialFamily, RadialTable};
