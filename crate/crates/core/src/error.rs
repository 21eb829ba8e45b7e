use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {name} = {value}: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("band search failed: {0}")]
    BandSearch(String),
    #[error("bracketing failure in band {band} at k = {k}: discriminant does not bracket the target")]
    Bracketing { band: usize, k: f64 },
    #[error("monodromy at omega = {omega} is within {distance:e} of a Jordan block")]
    Conditioning { omega: f64, distance: f64 },
    #[error("gauge failure in band {band}: profile overlap {overlap:e} at k = {k}")]
    Gauge { band: usize, k: f64, overlap: f64 },
    #[error("Wannier function of band {band} is not real: imaginary residue {residue:e}")]
    NotReal { band: usize, residue: f64 },
    #[error("resonance: band {band} at k = {k} lies within {gap:e} of the reference energy")]
    Resonance { band: usize, k: f64, gap: f64 },
    #[error("window mismatch: {0}")]
    Window(String),
    #[error("grid mismatch: {0}")]
    Grid(String),
    #[error("accuracy guard violated: dt = {dt} exceeds the admissible {required}")]
    Accuracy { dt: f64, required: f64 },
    #[error("instability: {0}")]
    Instability(String),
    #[error("non-finite values at t = {time}")]
    NonFinite { time: f64 },
    #[error("truncation guard: boundary amplitude ratio {ratio:e} exceeds {limit:e}")]
    Truncation { ratio: f64, limit: f64 },
    #[error("degenerate fit: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_domain(ok: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain { name, value, reason })
    }
}
