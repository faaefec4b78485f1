use crate::numerics::{svd, Matrix, Spectrum};
use crate::{Error, Result};

pub fn singular_spectrum(e: &Matrix) -> Result<Spectrum> {
    Ok(svd(e)?.s)
}

/// `‖σ‖₁ / ‖σ‖_∞`.
pub fn spectrum_abundance(s: &Spectrum) -> Result<f64> {
    let max = s.max();
    if !(max > 0.0) {
        return Err(Error::Analysis(
            "information abundance of a zero matrix".into(),
        ));
    }
    Ok(s.sum() / max)
}

pub fn information_abundance(e: &Matrix) -> Result<f64> {
    spectrum_abundance(&singular_spectrum(e)?)
}
