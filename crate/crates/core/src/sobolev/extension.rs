use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::field::{hs_inner, hs_norm, mode_count, multi_index, BandlimitedField};
use super::grid::GridDomain;
use super::order::SobolevOrder;
use super::sampled::{sample, SampledField};
use crate::error::{Error, Result};

/// Relative singular-value floor of the weighted pseudoinverse.
const SINGULAR_FLOOR: f64 = 1e-10;
/// Relative interpolation residual above which the data are declared
/// inconsistent with the cutoff.
const FEASIBILITY_TOL: f64 = 1e-8;
const REFINEMENT_STEPS: usize = 2;

/// The minimum-norm extension operator `E^s_U` at cutoff `N`.
///
/// Among all real band-limited fields of cutoff `N` whose samples on the
/// window equal the data, the operator returns the one of least H^s norm.
/// In the real basis `1, cos(k·x), sin(k·x)` (k in the positive half of the
/// mode lattice) the H^s norm is a diagonal quadratic form `xᵀDx`, so the
/// minimiser is `D^{-1/2} (A D^{-1/2})⁺ y`, with the pseudoinverse taken
/// through an SVD with singular values below `1e-10·σ_max` discarded.
#[derive(Clone, Debug)]
pub struct ExtensionOperator {
    domain: GridDomain,
    nodes: Vec<usize>,
    order: SobolevOrder,
    modes: usize,
    sample_matrix: DMatrix<f64>,
    inv_sqrt_weight: DVector<f64>,
    pinv: DMatrix<f64>,
    kernel: DMatrix<f64>,
    /// The same kernel in weighted coordinates, orthonormal.
    null_z: DMatrix<f64>,
    rank: usize,
}

impl ExtensionOperator {
    pub fn new(domain: &GridDomain, order: SobolevOrder, modes: usize) -> Result<Self> {
        Self::on_nodes(domain, (0..domain.len()).collect(), order, modes)
    }

    /// Operator on at most `2N+1` nodes per axis, spread evenly over the
    /// window's node positions, so the interpolation problem is never
    /// overdetermined. With at least `2N+1` nodes per axis the system is
    /// square and band-limited data of cutoff `N` extend to themselves.
    pub fn decimated(domain: &GridDomain, order: SobolevOrder, modes: usize) -> Result<Self> {
        let m = domain.dim();
        let cap = 2 * modes + 1;
        let keep: Vec<Vec<bool>> = (0..m)
            .map(|a| {
                let count = domain.axis_count(a);
                let mut keep = vec![count <= cap; count];
                if count > cap && cap == 1 {
                    keep[count / 2] = true;
                } else if count > cap {
                    for i in 0..cap {
                        keep[(i * (count - 1) + modes) / (cap - 1)] = true;
                    }
                }
                keep
            })
            .collect();
        let nodes = (0..domain.len())
            .filter(|&i| {
                let q = domain.axis_positions(i);
                (0..m).all(|a| keep[a][q[a]])
            })
            .collect();
        Self::on_nodes(domain, nodes, order, modes)
    }

    /// Operator that interpolates only at the listed nodes of `domain`.
    pub fn on_nodes(domain: &GridDomain, nodes: Vec<usize>, order: SobolevOrder, modes: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Input("extension from a window without nodes".into()));
        }
        if let Some(bad) = nodes.iter().find(|&&i| i >= domain.len()) {
            return Err(Error::Shape(format!("node {bad} outside a window of {} nodes", domain.len())));
        }
        let m = domain.dim();
        let per = mode_count(m, modes);
        let rows = nodes.len();
        let centre = per / 2;

        let mut weight = Vec::with_capacity(per);
        let mut columns: Vec<([i64; 2], bool)> = Vec::with_capacity(per);
        for idx in centre..per {
            let k = multi_index(m, modes, idx);
            let w = order.weight((k[0] * k[0] + k[1] * k[1]) as f64);
            if idx == centre {
                columns.push((k, true));
                weight.push(w);
            } else {
                columns.push((k, true));
                weight.push(0.5 * w);
                columns.push((k, false));
                weight.push(0.5 * w);
            }
        }

        let mut a = DMatrix::<f64>::zeros(rows, per);
        for (i, &node) in nodes.iter().enumerate() {
            let x = domain.coords(node);
            for (j, (k, is_cos)) in columns.iter().enumerate() {
                let phase: f64 = (0..m).map(|ax| k[ax] as f64 * x[ax]).sum();
                a[(i, j)] = if *is_cos { phase.cos() } else { phase.sin() };
            }
        }
        let inv_sqrt_weight = DVector::from_iterator(per, weight.iter().map(|w| 1.0 / w.sqrt()));
        let mut b = a.clone();
        for j in 0..per {
            b.column_mut(j).scale_mut(inv_sqrt_weight[j]);
        }
        // Pad to a square matrix so the SVD carries a full right basis.
        let padded_rows = rows.max(per);
        let mut padded = DMatrix::<f64>::zeros(padded_rows, per);
        padded.rows_mut(0, rows).copy_from(&b);
        let svd = padded.svd(true, true);
        let sigma_max = svd.singular_values.max();
        let floor = SINGULAR_FLOOR * sigma_max;
        let u = svd.u.as_ref().expect("requested U");
        let v_t = svd.v_t.as_ref().expect("requested Vᵀ");

        let mut pinv = DMatrix::<f64>::zeros(per, rows);
        let mut kernel_cols = Vec::new();
        let mut rank = 0;
        for (r, sigma) in svd.singular_values.iter().enumerate() {
            if *sigma > floor {
                rank += 1;
                let v = v_t.row(r).transpose();
                let u_r = u.column(r).rows(0, rows).into_owned();
                pinv += (v * u_r.transpose()) / *sigma;
            } else {
                kernel_cols.push(r);
            }
        }
        // Rows of Vᵀ beyond the singular values returned (none for a square SVD).
        let mut kernel = DMatrix::<f64>::zeros(per, kernel_cols.len());
        let mut null_z = DMatrix::<f64>::zeros(per, kernel_cols.len());
        for (c, r) in kernel_cols.iter().enumerate() {
            let v = v_t.row(*r).transpose();
            kernel.set_column(c, &v.component_mul(&inv_sqrt_weight));
            null_z.set_column(c, &v);
        }
        Ok(ExtensionOperator {
            domain: domain.clone(),
            nodes,
            order,
            modes,
            sample_matrix: a,
            inv_sqrt_weight,
            pinv,
            kernel,
            null_z,
            rank,
        })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn order(&self) -> SobolevOrder {
        self.order
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Window nodes the operator interpolates at.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Numerical rank of the weighted sampling matrix.
    pub fn rank(&self) -> usize {
        self.rank
    }

    fn coeffs_from_real(&self, x: &DVector<f64>, block: &mut [Complex64]) {
        let per = block.len();
        let centre = per / 2;
        block[centre] = Complex64::new(x[0], 0.0);
        for (t, idx) in (centre + 1..per).enumerate() {
            let alpha = x[1 + 2 * t];
            let beta = x[2 + 2 * t];
            let c = Complex64::new(0.5 * alpha, -0.5 * beta);
            block[idx] = c;
            block[per - 1 - idx] = c.conj();
        }
    }

    /// The minimum-norm extension of `field` (one solve per component).
    pub fn apply(&self, field: &SampledField) -> Result<BandlimitedField> {
        if field.domain() != &self.domain {
            return Err(Error::Shape("samples live on a different window than the operator".into()));
        }
        let m = self.domain.dim();
        let n = field.components();
        let rows = self.nodes.len();
        let per = mode_count(m, self.modes);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n * per];
        for c in 0..n {
            let y = DVector::from_iterator(rows, self.nodes.iter().map(|&i| field.value(i)[c]));
            let mut z = &self.pinv * &y;
            let mut x = z.component_mul(&self.inv_sqrt_weight);
            // Iterative refinement; corrections stay in the retained singular
            // subspace, so minimality is unaffected.
            for _ in 0..REFINEMENT_STEPS {
                let r = &y - &self.sample_matrix * &x;
                z += &self.pinv * r;
                z -= &self.null_z * (self.null_z.transpose() * &z);
                x = z.component_mul(&self.inv_sqrt_weight);
            }
            let residual = (&self.sample_matrix * &x - &y).amax();
            let tolerance = FEASIBILITY_TOL * y.amax().max(1.0);
            if residual > tolerance {
                return Err(Error::Infeasible { residual, tolerance });
            }
            self.coeffs_from_real(&x, &mut coeffs[c * per..(c + 1) * per]);
        }
        BandlimitedField::from_coeffs(m, self.modes, n, coeffs, true)
    }

    /// A basis of the band-limited fields that vanish at every interpolation node.
    pub fn kernel_basis(&self) -> Result<Vec<BandlimitedField>> {
        let m = self.domain.dim();
        let per = mode_count(m, self.modes);
        (0..self.kernel.ncols())
            .map(|j| {
                let x = self.kernel.column(j).into_owned();
                let mut block = vec![Complex64::new(0.0, 0.0); per];
                self.coeffs_from_real(&x, &mut block);
                BandlimitedField::from_coeffs(m, self.modes, 1, block, true)
            })
            .collect()
    }

    /// Quotient scalar product `⟨E γ, E η⟩_{H^s}`.
    pub fn inner(&self, gamma: &SampledField, eta: &SampledField) -> Result<f64> {
        hs_inner(&self.apply(gamma)?, &self.apply(eta)?, self.order)
    }

    /// Quotient norm `‖E γ‖_{H^s}`.
    pub fn norm(&self, gamma: &SampledField) -> Result<f64> {
        hs_norm(&self.apply(gamma)?, self.order)
    }

    /// Samples of the extension on the operator's window.
    pub fn resample(&self, ext: &BandlimitedField) -> Result<SampledField> {
        sample(ext, &self.domain)
    }
}

/// One-shot minimum-norm extension; see [`ExtensionOperator`].
pub fn min_norm_extension(field: &SampledField, s: SobolevOrder, modes: usize) -> Result<BandlimitedField> {
    ExtensionOperator::new(field.domain(), s, modes)?.apply(field)
}

/// Quotient norm of `H^s(U)` realised at cutoff `modes`.
pub fn quotient_norm(field: &SampledField, s: SobolevOrder, modes: usize) -> Result<f64> {
    ExtensionOperator::new(field.domain(), s, modes)?.norm(field)
}

#[cfg(test)]
mod tests {
    use super::super::grid::BoxRegion;
    use super::super::sampled::restrict;
    use super::*;
    use crate::probe::suite_rng;
    use std::f64::consts::PI;

    fn order(s: f64) -> SobolevOrder {
        SobolevOrder::new(s).unwrap()
    }

    #[test]
    fn zero_data_extend_to_zero() {
        let u = GridDomain::boxed(BoxRegion::interval(0.0, PI).unwrap(), 33).unwrap();
        let z = SampledField::zeros(u, 2).unwrap();
        let e = min_norm_extension(&z, order(1.0), 8).unwrap();
        assert!(e.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn constants_on_the_full_torus_extend_to_constants() {
        let u = GridDomain::full(1, 17).unwrap();
        let one = SampledField::from_fn(u, 1, |_| vec![1.0]).unwrap();
        for s in [0.0, 1.0, 3.5] {
            let e = min_norm_extension(&one, order(s), 8).unwrap();
            let c0 = e.coeff(0, &[0]).unwrap();
            assert!((c0.re - 1.0).abs() < 1e-10, "s={s}: {c0}");
            assert!((hs_norm(&e, order(s)).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constants_on_a_window_cost_at_most_one() {
        // The constant interpolates, so the minimiser can only be cheaper.
        let u = GridDomain::boxed(BoxRegion::interval(1.0, 2.5).unwrap(), 33).unwrap();
        let one = SampledField::from_fn(u.clone(), 1, |_| vec![1.0]).unwrap();
        for s in [0.0, 1.0, 3.5] {
            let e = min_norm_extension(&one, order(s), 8).unwrap();
            assert!(hs_norm(&e, order(s)).unwrap() <= 1.0 + 1e-10);
            let back = sample(&e, &u).unwrap();
            assert!(back.values().iter().all(|v| (v - 1.0).abs() < 1e-8));
        }
    }

    #[test]
    fn cosine_on_half_circle_has_smaller_extension() {
        let u = GridDomain::boxed(BoxRegion::interval(0.0, PI).unwrap(), 33).unwrap();
        let cos = BandlimitedField::cosine(1, 8, &[1]).unwrap();
        let gamma = restrict(&cos, &u).unwrap();
        let e = min_norm_extension(&gamma, order(2.0), 8).unwrap();
        assert!(hs_norm(&e, order(2.0)).unwrap() <= 1.0 + 1e-12);
        let back = sample(&e, &u).unwrap();
        for (a, b) in back.values().iter().zip(gamma.values()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn kernel_is_orthogonal_to_extensions() {
        let mut rng = suite_rng(21, "ext-kernel");
        let u = GridDomain::boxed(BoxRegion::interval(0.5, 3.0).unwrap(), 25).unwrap();
        let a = BandlimitedField::random(1, 10, 1, 1.0, &mut rng).unwrap();
        let op = ExtensionOperator::new(&u, order(1.5), 10).unwrap();
        let e = op.apply(&restrict(&a, &u).unwrap()).unwrap();
        let kernel = op.kernel_basis().unwrap();
        assert_eq!(kernel.len(), 21 - op.rank());
        for k in &kernel {
            assert!(sample(k, &u).unwrap().sup_norm() < 1e-8);
            assert!(hs_inner(&e, k, order(1.5)).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn decimated_operator_is_underdetermined() {
        let u = GridDomain::boxed(BoxRegion::interval(0.3, 6.0).unwrap(), 129).unwrap();
        let op = ExtensionOperator::decimated(&u, order(1.0), 8).unwrap();
        assert_eq!(op.nodes().len(), 17);
        let cos = BandlimitedField::cosine(1, 8, &[3]).unwrap();
        let e = op.apply(&restrict(&cos, &u).unwrap()).unwrap();
        let back = sample(&e, &u).unwrap();
        for &i in op.nodes() {
            assert!((back.value(i)[0] - (3.0 * u.coords(i)[0]).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn inconsistent_data_are_reported() {
        let u = GridDomain::boxed(BoxRegion::interval(0.1, 6.0).unwrap(), 64).unwrap();
        let rough = SampledField::from_fn(u, 1, |x| vec![(x[0] - 3.0).abs()]).unwrap();
        assert!(matches!(min_norm_extension(&rough, order(1.0), 4), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn two_dimensional_windows() {
        let mut rng = suite_rng(22, "ext-2d");
        let u = GridDomain::boxed(BoxRegion::new(vec![0.5, 1.0], vec![3.0, 5.0]).unwrap(), 13).unwrap();
        let a = BandlimitedField::random(2, 3, 1, 0.0, &mut rng).unwrap();
        let gamma = restrict(&a, &u).unwrap();
        let e = min_norm_extension(&gamma, order(1.0), 3).unwrap();
        assert!(hs_norm(&e, order(1.0)).unwrap() <= hs_norm(&a, order(1.0)).unwrap() + 1e-10);
        let back = sample(&e, &u).unwrap();
        for (x, y) in back.values().iter().zip(gamma.values()) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}
