pub mod breuil;
pub mod cert;
pub mod descent;
pub mod error;
pub mod filtmod;
pub mod kisin;
pub mod padic;
pub mod pipeline;
pub mod reduction;
pub mod series;
pub mod val;

pub use cert::Certificate;
pub use error::{Error, Result};
pub use padic::{vp_factorial, FieldElem, Prime};
pub use series::{Ring, TruncSeries};
pub use val::{Val, Verdict};
