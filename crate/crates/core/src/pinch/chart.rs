use num_complex::Complex64;

use super::{strip_map, strip_map_inverse, PinchProfile, Side};
use crate::error::{invalid, Error, Result};
use crate::lamination::{GoodNeighborhood, HalfPlaneGeodesic, KoenigsChart};

/// `ϕ = Ψ ∘ M ∘ exp ∘ S` from the band `R × [L_b, L_r]` onto one side of the
/// good neighborhood of a leaf, with its inverse `ψ`.
#[derive(Debug, Clone)]
pub struct StripChart {
    pub side: Side,
    pub delta: f64,
    pub neighborhood: GoodNeighborhood,
    pub profile: PinchProfile,
    pub chart: KoenigsChart,
}

impl StripChart {
    pub fn new(
        chart: &KoenigsChart,
        geodesic: HalfPlaneGeodesic,
        side: Side,
        profile: &PinchProfile,
        delta: f64,
    ) -> Result<StripChart> {
        profile.validate()?;
        Ok(StripChart {
            side,
            delta,
            neighborhood: GoodNeighborhood::new(geodesic, delta)?,
            profile: profile.clone(),
            chart: chart.clone(),
        })
    }

    fn in_band(&self, y: f64) -> bool {
        let tol = 1e-9 * (1.0 + self.profile.l_r);
        y >= self.profile.l_b - tol && y <= self.profile.l_r + tol
    }

    /// Boundary parameter `M(exp(S(z)))` of a band point.
    pub fn zeta_of_band(&self, z: Complex64) -> Result<Complex64> {
        if !self.in_band(z.im) {
            return invalid(format!("{z} lies outside the band"));
        }
        let (s, _) = strip_map(self.side, &self.profile, self.delta, z);
        Ok(self.neighborhood.isometry.apply(s.exp()))
    }

    pub fn phi(&self, z: Complex64) -> Result<Complex64> {
        self.chart.psi(self.zeta_of_band(z)?)
    }

    /// Band coordinate of a point of the neighborhood side, and its derivative.
    pub fn psi(&self, p: Complex64) -> Result<(Complex64, Complex64)> {
        let (zeta, dzeta) = self.chart.zeta(p).ok_or_else(|| Error::Chart(format!("chart overflows at {p}")))?;
        if !(zeta.im > 0.0) {
            return Err(Error::Chart(format!("{p} is outside the chart image")));
        }
        let minv = self.neighborhood.isometry.inverse();
        let e = minv.apply(zeta);
        let s = e.ln();
        let band = strip_map_inverse(self.side, &self.profile, self.delta, s);
        if !self.in_band(band.im) {
            return invalid(format!("{p} is outside this side of the neighborhood"));
        }
        let (_, gain) = strip_map(self.side, &self.profile, self.delta, band);
        let d = minv.derivative(zeta) / e * dzeta / gain;
        Ok((band, d))
    }
}
