use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::order::SobolevOrder;
use crate::error::{Error, Result};

/// A trigonometric polynomial `x ↦ Σ_k c_k e^{i k·x}` on the m-torus with
/// values in `ℝⁿ` (or `ℂⁿ` when the reality flag is clear).
///
/// Coefficients are stored component-major; within a component the
/// multi-indices `k ∈ [-N, N]^m` run in row-major order with the first axis
/// slowest. Negating `k` reverses the flat index, which is how the reality
/// constraint `c_{-k} = conj(c_k)` is enforced.
///
/// The normalisation is the one of the probability measure on the torus, so
/// `Σ_k |c_k|²` is the mean square of the function.
#[derive(Clone, Debug, PartialEq)]
pub struct BandlimitedField {
    m: usize,
    modes: usize,
    components: usize,
    real: bool,
    coeffs: Vec<Complex64>,
}

fn check_shape(m: usize, components: usize) -> Result<()> {
    if m != 1 && m != 2 {
        return Err(Error::Input(format!("torus dimension must be 1 or 2, got {m}")));
    }
    if components == 0 {
        return Err(Error::Input("a field needs at least one component".into()));
    }
    Ok(())
}

/// Number of multi-indices with `|k_i| ≤ modes`.
pub(crate) fn mode_count(m: usize, modes: usize) -> usize {
    (2 * modes + 1).pow(m as u32)
}

pub(crate) fn multi_index(m: usize, modes: usize, flat: usize) -> [i64; 2] {
    let side = 2 * modes + 1;
    let n = modes as i64;
    if m == 1 {
        [flat as i64 - n, 0]
    } else {
        [(flat / side) as i64 - n, (flat % side) as i64 - n]
    }
}

impl BandlimitedField {
    pub fn zeros(m: usize, modes: usize, components: usize) -> Result<Self> {
        check_shape(m, components)?;
        Ok(BandlimitedField {
            m,
            modes,
            components,
            real: true,
            coeffs: vec![Complex64::new(0.0, 0.0); components * mode_count(m, modes)],
        })
    }

    /// Builds a field from raw coefficients.
    ///
    /// With `real` set, the coefficients must satisfy `c_{-k} = conj(c_k)`
    /// exactly; nothing is silently projected.
    pub fn from_coeffs(m: usize, modes: usize, components: usize, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        check_shape(m, components)?;
        let expected = components * mode_count(m, modes);
        if coeffs.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} coefficients for m={m}, N={modes}, n={components}, got {}",
                coeffs.len()
            )));
        }
        let field = BandlimitedField { m, modes, components, real, coeffs };
        if real && !field.is_conjugate_symmetric() {
            return Err(Error::Input("reality flag set but coefficients are not conjugate symmetric".into()));
        }
        Ok(field)
    }

    /// Builds the real field whose coefficients are the conjugate-symmetric
    /// part of `coeffs`, i.e. the real part of the complex polynomial.
    pub fn real_part_of(m: usize, modes: usize, components: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let mut field = Self::from_coeffs(m, modes, components, coeffs, false)?;
        let per = field.mode_count();
        for c in 0..components {
            let block = &mut field.coeffs[c * per..(c + 1) * per];
            for idx in 0..per / 2 {
                let mirror = per - 1 - idx;
                let avg = 0.5 * (block[mirror] + block[idx].conj());
                block[mirror] = avg;
                block[idx] = avg.conj();
            }
            block[per / 2].im = 0.0;
        }
        field.real = true;
        Ok(field)
    }

    pub fn constant(m: usize, modes: usize, value: &[f64]) -> Result<Self> {
        let mut field = Self::zeros(m, modes, value.len())?;
        let per = field.mode_count();
        for (c, v) in value.iter().enumerate() {
            field.coeffs[c * per + per / 2] = Complex64::new(*v, 0.0);
        }
        Ok(field)
    }

    /// `x ↦ cos(k·x)` as a scalar field.
    pub fn cosine(m: usize, modes: usize, k: &[i64]) -> Result<Self> {
        Self::single_mode(m, modes, k, Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0))
    }

    /// `x ↦ sin(k·x)` as a scalar field.
    pub fn sine(m: usize, modes: usize, k: &[i64]) -> Result<Self> {
        Self::single_mode(m, modes, k, Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.0))
    }

    fn single_mode(m: usize, modes: usize, k: &[i64], half: Complex64, at_zero: Complex64) -> Result<Self> {
        let mut field = Self::zeros(m, modes, 1)?;
        let idx =
            Self::flat_index(m, modes, k).ok_or_else(|| Error::Input(format!("mode {k:?} outside cutoff {modes}")))?;
        let per = field.mode_count();
        if idx == per / 2 {
            field.coeffs[idx] = at_zero;
        } else {
            field.coeffs[idx] = half;
            field.coeffs[per - 1 - idx] = half.conj();
        }
        Ok(field)
    }

    /// Random real field with Gaussian coefficients damped by
    /// `(1 + |k|²)^{-decay/2}`.
    pub fn random<R: Rng + ?Sized>(m: usize, modes: usize, components: usize, decay: f64, rng: &mut R) -> Result<Self> {
        let mut field = Self::zeros(m, modes, components)?;
        let per = field.mode_count();
        for c in 0..components {
            for idx in per / 2..per {
                let k = multi_index(m, modes, idx);
                let amp = (1.0 + (k[0] * k[0] + k[1] * k[1]) as f64).powf(-0.5 * decay);
                let re: f64 = rng.sample(StandardNormal);
                let value = if idx == per / 2 {
                    Complex64::new(re * amp, 0.0)
                } else {
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im) * (amp * std::f64::consts::FRAC_1_SQRT_2)
                };
                field.coeffs[c * per + idx] = value;
                field.coeffs[c * per + per - 1 - idx] = value.conj();
            }
        }
        Ok(field)
    }

    pub fn flat_index(m: usize, modes: usize, k: &[i64]) -> Option<usize> {
        let n = modes as i64;
        if k.len() != m || k.iter().any(|ki| ki.abs() > n) {
            return None;
        }
        let side = 2 * n + 1;
        Some(k.iter().fold(0i64, |acc, ki| acc * side + ki + n) as usize)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn mode_count(&self) -> usize {
        mode_count(self.m, self.modes)
    }

    /// Multi-index of the flat position `flat` (second entry 0 when m = 1).
    pub fn multi_index(&self, flat: usize) -> [i64; 2] {
        multi_index(self.m, self.modes, flat)
    }

    pub fn coeff(&self, component: usize, k: &[i64]) -> Option<Complex64> {
        let idx = Self::flat_index(self.m, self.modes, k)?;
        (component < self.components).then(|| self.coeffs[component * self.mode_count() + idx])
    }

    fn is_conjugate_symmetric(&self) -> bool {
        let per = self.mode_count();
        self.coeffs.chunks(per).all(|block| {
            (0..per).all(|idx| {
                let a = block[idx];
                let b = block[per - 1 - idx].conj();
                a.re == b.re && a.im == b.im
            })
        })
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.m != other.m || self.modes != other.modes || self.components != other.components {
            return Err(Error::Shape(format!(
                "fields differ: (m={}, N={}, n={}) vs (m={}, N={}, n={})",
                self.m, self.modes, self.components, other.m, other.modes, other.components
            )));
        }
        Ok(())
    }

    fn axis_phases(&self, x: f64) -> Vec<Complex64> {
        let n = self.modes as i64;
        (-n..=n).map(|k| Complex64::from_polar(1.0, k as f64 * x)).collect()
    }

    /// Complex values at a point.
    pub fn eval_complex(&self, x: &[f64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.m, "point dimension must match the torus dimension");
        let per = self.mode_count();
        let side = 2 * self.modes + 1;
        let p0 = self.axis_phases(x[0]);
        let p1 = if self.m == 2 { self.axis_phases(x[1]) } else { Vec::new() };
        self.coeffs
            .chunks(per)
            .map(|block| {
                let mut acc = Complex64::new(0.0, 0.0);
                if self.m == 1 {
                    for (c, e) in block.iter().zip(&p0) {
                        acc += c * e;
                    }
                } else {
                    for (i, e0) in p0.iter().enumerate() {
                        let mut inner = Complex64::new(0.0, 0.0);
                        for (c, e1) in block[i * side..(i + 1) * side].iter().zip(&p1) {
                            inner += c * e1;
                        }
                        acc += inner * e0;
                    }
                }
                acc
            })
            .collect()
    }

    /// Real values at a point (the real part when the field is complex).
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.eval_complex(x).into_iter().map(|z| z.re).collect()
    }

    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.same_shape(other)?;
        Ok(BandlimitedField {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x * a + y * b).collect(),
            real: self.real && other.real,
            ..self.clone()
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.linear_combination(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        BandlimitedField { coeffs: self.coeffs.iter().map(|c| c * a).collect(), ..self.clone() }
    }

    /// The same polynomial at a different cutoff (zero padded or truncated).
    pub fn resized(&self, modes: usize) -> Self {
        let per_new = mode_count(self.m, modes);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.components * per_new];
        let per = self.mode_count();
        for c in 0..self.components {
            for idx in 0..per {
                let k = self.multi_index(idx);
                if let Some(j) = Self::flat_index(self.m, modes, &k[..self.m]) {
                    coeffs[c * per_new + j] = self.coeffs[c * per + idx];
                }
            }
        }
        BandlimitedField { modes, coeffs, ..self.clone() }
    }

    /// The field `u ↦ f(σ ⊙ u + b)` for axis signs `σ ∈ {±1}` and shift `b`.
    ///
    /// This is exact on coefficients: mode `k` moves to `σ ⊙ k` and picks up
    /// the phase `e^{i k·b}`.
    pub fn affine_pullback(&self, sign: &[f64], shift: &[f64]) -> Result<Self> {
        if sign.len() != self.m || shift.len() != self.m {
            return Err(Error::Shape("sign/shift length must equal the torus dimension".into()));
        }
        if sign.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(Error::Input("axis signs must be +1 or -1".into()));
        }
        let per = self.mode_count();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        for c in 0..self.components {
            // Only the non-negative half is computed; the mirror is its conjugate.
            for idx in per / 2..per {
                let k = self.multi_index(idx);
                let phase: f64 = (0..self.m).map(|a| k[a] as f64 * shift[a]).sum();
                let value = self.coeffs[c * per + idx] * Complex64::from_polar(1.0, phase);
                let moved: Vec<i64> = (0..self.m).map(|a| k[a] * sign[a] as i64).collect();
                let j = Self::flat_index(self.m, self.modes, &moved).expect("signs preserve the cutoff");
                coeffs[c * per + j] = value;
                let mirror_value = if self.real {
                    value.conj()
                } else {
                    self.coeffs[c * per + per - 1 - idx] * Complex64::from_polar(1.0, -phase)
                };
                coeffs[c * per + per - 1 - j] = mirror_value;
            }
        }
        Ok(BandlimitedField { coeffs, ..self.clone() })
    }

    pub fn component(&self, c: usize) -> Result<Self> {
        if c >= self.components {
            return Err(Error::Shape(format!("component {c} of {}", self.components)));
        }
        let per = self.mode_count();
        Ok(BandlimitedField { components: 1, coeffs: self.coeffs[c * per..(c + 1) * per].to_vec(), ..self.clone() })
    }

    /// Concatenates the components of several fields with a common torus and cutoff.
    pub fn stack(fields: &[BandlimitedField]) -> Result<Self> {
        let first = fields.first().ok_or_else(|| Error::Input("cannot stack an empty list".into()))?;
        let mut coeffs = Vec::new();
        let mut components = 0;
        let mut real = true;
        for f in fields {
            if f.m != first.m || f.modes != first.modes {
                return Err(Error::Shape("stacked fields must share m and N".into()));
            }
            coeffs.extend_from_slice(&f.coeffs);
            components += f.components;
            real &= f.real;
        }
        Ok(BandlimitedField { m: first.m, modes: first.modes, components, real, coeffs })
    }
}

/// The H^s scalar product `Σ_k w_s(k) Re⟨c_k(a), c_k(b)⟩`, summed over
/// components in a fixed order.
pub fn hs_inner(a: &BandlimitedField, b: &BandlimitedField, s: SobolevOrder) -> Result<f64> {
    a.same_shape(b)?;
    if !a.real || !b.real {
        return Err(Error::Input("Sobolev scalar product is defined for real fields".into()));
    }
    let per = a.mode_count();
    let weights: Vec<f64> = (0..per)
        .map(|idx| {
            let k = a.multi_index(idx);
            s.weight((k[0] * k[0] + k[1] * k[1]) as f64)
        })
        .collect();
    let mut total = 0.0;
    for (ca, cb) in a.coeffs.chunks(per).zip(b.coeffs.chunks(per)) {
        for ((x, y), w) in ca.iter().zip(cb).zip(&weights) {
            total += w * (x.re * y.re + x.im * y.im);
        }
    }
    Ok(total)
}

pub fn hs_norm(a: &BandlimitedField, s: SobolevOrder) -> Result<f64> {
    Ok(hs_inner(a, a, s)?.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::suite_rng;

    fn order(s: f64) -> SobolevOrder {
        SobolevOrder::new(s).unwrap()
    }

    /// Weighted sum written out mode by mode, independent of `hs_inner`.
    fn summation_oracle(cos_coeff: f64, k: f64, s: f64) -> f64 {
        2.0 * cos_coeff * cos_coeff * (1.0 + k * k).powf(s / 2.0)
    }

    #[test]
    fn constant_one_has_unit_norm_at_every_order() {
        let one = BandlimitedField::constant(1, 4, &[1.0]).unwrap();
        for s in [0.0, 1.0, 7.3] {
            assert_eq!(hs_inner(&one, &one, order(s)).unwrap(), 1.0);
            assert_eq!(hs_norm(&one, order(s)).unwrap(), 1.0);
        }
    }

    #[test]
    fn cosine_norms_match_summation_oracle() {
        let cos = BandlimitedField::cosine(1, 4, &[1]).unwrap();
        assert!((hs_inner(&cos, &cos, order(2.0)).unwrap() - summation_oracle(0.5, 1.0, 2.0)).abs() < 1e-15);
        assert!((hs_inner(&cos, &cos, order(2.0)).unwrap() - 1.0).abs() < 1e-15);
        let n0 = hs_norm(&cos, order(0.0)).unwrap();
        assert!((n0 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let n1 = hs_norm(&cos, order(1.0)).unwrap();
        let n2 = hs_norm(&cos, order(2.0)).unwrap();
        assert!((n1 - 2f64.powf(0.25) / 2f64.sqrt()).abs() < 1e-15);
        assert!(n1 < n2);
    }

    #[test]
    fn cosine_and_sine_are_orthogonal() {
        let cos = BandlimitedField::cosine(1, 3, &[1]).unwrap();
        let sin = BandlimitedField::sine(1, 3, &[1]).unwrap();
        assert_eq!(hs_inner(&cos, &sin, order(2.0)).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = BandlimitedField::zeros(1, 3, 1).unwrap();
        let b = BandlimitedField::zeros(1, 4, 1).unwrap();
        assert!(matches!(hs_inner(&a, &b, order(1.0)), Err(Error::Shape(_))));
    }

    #[test]
    fn reality_is_enforced_exactly() {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 5];
        coeffs[3] = Complex64::new(1.0, 1.0);
        assert!(BandlimitedField::from_coeffs(1, 2, 1, coeffs.clone(), true).is_err());
        coeffs[1] = Complex64::new(1.0, -1.0);
        assert!(BandlimitedField::from_coeffs(1, 2, 1, coeffs, true).is_ok());
    }

    #[test]
    fn evaluation_of_basic_modes() {
        let cos = BandlimitedField::cosine(2, 2, &[1, -2]).unwrap();
        let x = [0.3, 1.1];
        assert!((cos.eval(&x)[0] - (0.3f64 - 2.2).cos()).abs() < 1e-14);
        let sin = BandlimitedField::sine(1, 2, &[2]).unwrap();
        assert!((sin.eval(&[0.4])[0] - 0.8f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn affine_pullback_matches_pointwise_composition() {
        let mut rng = suite_rng(3, "field-affine");
        let f = BandlimitedField::random(2, 3, 2, 1.0, &mut rng).unwrap();
        let g = f.affine_pullback(&[-1.0, 1.0], &[0.7, 2.0]).unwrap();
        assert!(g.is_real());
        for x in [[0.1, 0.2], [3.0, 5.5], [6.0, 0.0]] {
            let lhs = g.eval(&x);
            let rhs = f.eval(&[-x[0] + 0.7, x[1] + 2.0]);
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn resizing_preserves_values() {
        let mut rng = suite_rng(4, "field-resize");
        let f = BandlimitedField::random(1, 4, 1, 0.0, &mut rng).unwrap();
        let g = f.resized(9);
        assert!((f.eval(&[1.3])[0] - g.eval(&[1.3])[0]).abs() < 1e-13);
        assert_eq!(g.resized(4), f);
    }

    #[test]
    fn real_part_projection_is_symmetric() {
        let coeffs: Vec<Complex64> = (0..9).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let f = BandlimitedField::real_part_of(2, 1, 1, coeffs).unwrap();
        assert!(f.is_conjugate_symmetric());
    }
}
