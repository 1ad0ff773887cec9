//! The quantile-parameterized log-symmetric law `QLS(Q, φ, g)` at a fixed
//! level `q`: `Q` is the `100q`-th quantile of `Y`, `φ` the power parameter.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{DensityKernel, FamilyTag, KernelFamily};

/// CDF values handed to `ln` or `Φ⁻¹` downstream are kept inside this band.
pub const CDF_CLAMP: f64 = 1e-15;

/// Signed standardized value `[ln y - ln Q + √φ z_q] / √φ`.
#[inline]
pub fn standardize(ln_y: f64, ln_quantile: f64, sqrt_phi: f64, z_q: f64) -> f64 {
    (ln_y - ln_quantile) / sqrt_phi + z_q
}

#[derive(Debug, Clone, PartialEq)]
pub struct QlsParams {
    quantile: f64,
    phi: f64,
    q: f64,
    z_q: f64,
    kernel: Arc<DensityKernel>,
}

impl QlsParams {
    pub fn new(quantile: f64, phi: f64, q: f64, kernel: Arc<DensityKernel>) -> Result<Self> {
        if !(quantile > 0.0 && quantile.is_finite()) {
            return Err(Error::DomainError(format!(
                "Q must be positive and finite, got {quantile}"
            )));
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(Error::DomainError(format!("φ must be positive and finite, got {phi}")));
        }
        let z_q = kernel.quantile(q)?;
        let p = Self {
            quantile,
            phi,
            q,
            z_q,
            kernel,
        };
        let lambda = p.scale();
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::DomainError(format!(
                "implied scale λ = {lambda} is not positive and finite"
            )));
        }
        Ok(p)
    }

    /// Build from the classical scale `λ` (the median).
    pub fn from_scale(lambda: f64, phi: f64, q: f64, kernel: Arc<DensityKernel>) -> Result<Self> {
        let z_q = kernel.quantile(q)?;
        Self::new(lambda * (phi.sqrt() * z_q).exp(), phi, q, kernel)
    }

    pub fn quantile_param(&self) -> f64 {
        self.quantile
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn level(&self) -> f64 {
        self.q
    }

    pub fn z_q(&self) -> f64 {
        self.z_q
    }

    pub fn kernel(&self) -> &Arc<DensityKernel> {
        &self.kernel
    }

    /// `λ = Q / exp(√φ z_q)`.
    pub fn scale(&self) -> f64 {
        self.quantile / (self.phi.sqrt() * self.z_q).exp()
    }

    /// `Ψ = ln Q`.
    pub fn psi(&self) -> f64 {
        self.quantile.ln()
    }

    fn z(&self, y: f64) -> f64 {
        standardize(y.ln(), self.quantile.ln(), self.phi.sqrt(), self.z_q)
    }

    pub fn pdf(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::DomainError(format!("density requires y > 0, got {y}")));
        }
        let z = self.z(y);
        Ok((self.kernel.ln_pdf(z) - 0.5 * self.phi.ln() - y.ln()).exp())
    }

    /// `F(y) = G(z)`, clamped to `[CDF_CLAMP, 1 - CDF_CLAMP]`.
    pub fn cdf(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::DomainError(format!("CDF requires y > 0, got {y}")));
        }
        Ok(self.kernel.cdf(self.z(y)).clamp(CDF_CLAMP, 1.0 - CDF_CLAMP))
    }

    /// `λ exp(√φ z_prob)`.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if prob == self.q {
            return Ok(self.quantile);
        }
        let z = self.kernel.quantile(prob)?;
        Ok(self.quantile * (self.phi.sqrt() * (z - self.z_q)).exp())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let lambda = self.scale();
        let s = self.phi.sqrt();
        self.kernel
            .sample(n, rng)
            .into_iter()
            .map(|z| lambda * (s * z).exp())
            .collect()
    }

    /// Law of `cY` for `c > 0`.
    pub fn scale_law(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::DomainError(format!("scale factor must be positive, got {c}")));
        }
        Ok(Self {
            quantile: c * self.quantile,
            ..self.clone()
        })
    }

    /// Law of `Y^c` for `c > 0`.
    pub fn power_law(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::DomainError(format!("power must be positive, got {c}")));
        }
        Ok(Self {
            quantile: self.quantile.powf(c),
            phi: c * c * self.phi,
            ..self.clone()
        })
    }

    pub fn to_record(&self) -> QlsRecord {
        let fam = self.kernel.family();
        QlsRecord {
            family: fam.tag(),
            extra: fam.extra(),
            quantile: self.quantile,
            phi: self.phi,
            q: self.q,
        }
    }
}

/// Flat serialized form of [`QlsParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlsRecord {
    pub family: FamilyTag,
    pub extra: Vec<f64>,
    #[serde(rename = "Q")]
    pub quantile: f64,
    pub phi: f64,
    pub q: f64,
}

impl QlsRecord {
    pub fn into_params(self) -> Result<QlsParams> {
        let kernel = DensityKernel::new(KernelFamily::new(self.family, &self.extra)?)?;
        QlsParams::new(self.quantile, self.phi, self.q, Arc::new(kernel))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn law(fam: KernelFamily, quantile: f64, phi: f64, q: f64) -> QlsParams {
        QlsParams::new(quantile, phi, q, Arc::new(DensityKernel::new(fam).unwrap())).unwrap()
    }

    #[test]
    fn pdf_examples() {
        let p = law(KernelFamily::LogNo, 1.0, 1.0, 0.5);
        assert_relative_eq!(p.pdf(1.0).unwrap(), 0.398_942_280_401_432_7, max_relative = 1e-14);
        let p = law(KernelFamily::LogNo, std::f64::consts::E, 1.0, 0.5);
        assert_relative_eq!(
            p.pdf(1.0).unwrap(),
            0.398_942_280_401_432_7 * (-0.5f64).exp(),
            max_relative = 1e-14
        );
        assert!(p.pdf(0.0).is_err());
        assert!(p.cdf(-1.0).is_err());
    }

    #[test]
    fn cdf_at_quantile_parameter_is_level() {
        let p = law(KernelFamily::LogT { nu: 3.0 }, 2.5, 0.7, 0.3);
        assert_relative_eq!(p.cdf(2.5).unwrap(), 0.3, epsilon = 1e-12);
        let p = law(KernelFamily::LogNo, 1.0, 1.0, 0.5);
        assert_relative_eq!(p.cdf(1.959964f64.exp()).unwrap(), 0.975, epsilon = 1e-7);
        assert!(p.cdf(1e-300).unwrap() <= 1e-15);
    }

    #[test]
    fn quantile_examples() {
        let p = law(KernelFamily::LogHp { alpha: 2.0 }, 3.0, 2.0, 0.25);
        assert_eq!(p.quantile(0.25).unwrap(), 3.0);
        let kernel = Arc::new(DensityKernel::new(KernelFamily::LogNo).unwrap());
        let p = QlsParams::from_scale(2.0, 1.0, 0.8, kernel).unwrap();
        assert_relative_eq!(p.quantile(0.5).unwrap(), 2.0, max_relative = 1e-14);
        let p = law(KernelFamily::LogT { nu: 3.0 }, 1.0, 4.0, 0.5);
        assert_relative_eq!(
            p.quantile(0.975).unwrap(),
            (2.0 * 3.182_446_305_284_263f64).exp(),
            max_relative = 1e-9
        );
        assert!(p.quantile(1.5).is_err());
    }

    #[test]
    fn scale_and_power_laws() {
        let p = law(KernelFamily::LogNo, 2.0, 1.0, 0.5);
        assert_eq!(p.scale_law(1.0).unwrap(), p);
        let s = p.scale_law(3.0).unwrap();
        assert_eq!(s.quantile_param(), 6.0);
        assert_eq!(s.phi(), 1.0);
        let pw = p.power_law(2.0).unwrap();
        assert_eq!(pw.quantile_param(), 4.0);
        assert_eq!(pw.phi(), 4.0);
        assert!(p.scale_law(0.0).is_err());
        assert!(p.power_law(-1.0).is_err());
    }

    #[test]
    fn record_round_trip() {
        let p = law(KernelFamily::EbsT { alpha: 0.5, nu: 3.0 }, 1.7, 0.4, 0.75);
        let back = p.to_record().into_params().unwrap();
        assert_eq!(back, p);
    }
}
