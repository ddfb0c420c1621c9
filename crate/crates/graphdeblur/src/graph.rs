//! Image-adaptive graph construction.
//!
//! Pixels become graph nodes; pixels within Chebyshev distance R are joined
//! with Gaussian similarity weights taken from a reference image. The
//! resulting Laplacian L = (D - Omega)/||Omega||_F penalizes intensity
//! differences across edges that the reference deems similar, and costs
//! next to nothing across edges the reference already separates.

use crate::error::{Error, Result};
use crate::image::{lex_index, Image};
use crate::sparse::SparseMatrix;

/// Weights below this threshold underflow to zero and are dropped from the
/// sparsity pattern.
pub const WEIGHT_FLOOR: f64 = 1e-300;

/// Neighborhood radius and kernel width for the similarity graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    r: usize,
    sigma: f64,
}

impl GraphConfig {
    /// Validates R >= 1 and sigma > 0.
    pub fn new(r: usize, sigma: f64) -> Result<Self> {
        if r < 1 {
            return Err(Error::Config("graph radius R must be at least 1".into()));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Config(format!(
                "graph kernel parameter sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(GraphConfig { r, sigma })
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Builds the similarity adjacency Omega of `x_ref`.
///
/// omega(i, j) = exp(-(x_ref(i) - x_ref(j))^2 / sigma) for distinct pixels
/// with max(|i1-j1|, |i2-j2|) <= R. Neighborhoods are truncated at the image
/// border; they never wrap around, unlike the periodic blur. The result is
/// exactly symmetric with an empty diagonal.
pub fn build_adjacency(x_ref: &Image, cfg: &GraphConfig) -> Result<SparseMatrix> {
    let n = x_ref.side();
    let big_n = n * n;
    let r = cfg.r;
    let max_row_nnz = (2 * r + 1) * (2 * r + 1) - 1;

    let mut row_ptr = Vec::with_capacity(big_n + 1);
    let mut col_idx = Vec::with_capacity(big_n * max_row_nnz.min(big_n));
    let mut values = Vec::with_capacity(col_idx.capacity());
    row_ptr.push(0);
    let mut frob_sq = 0.0;
    for i1 in 0..n {
        let j1_lo = i1.saturating_sub(r);
        let j1_hi = (i1 + r).min(n - 1);
        for i2 in 0..n {
            let here = x_ref.get(i1, i2);
            let j2_lo = i2.saturating_sub(r);
            let j2_hi = (i2 + r).min(n - 1);
            for j1 in j1_lo..=j1_hi {
                for j2 in j2_lo..=j2_hi {
                    if j1 == i1 && j2 == i2 {
                        continue;
                    }
                    let diff = here - x_ref.get(j1, j2);
                    let w = (-(diff * diff) / cfg.sigma).exp();
                    if w < WEIGHT_FLOOR {
                        continue;
                    }
                    col_idx.push(lex_index(j1, j2, n));
                    values.push(w);
                    frob_sq += w * w;
                }
            }
            row_ptr.push(col_idx.len());
        }
    }
    if frob_sq == 0.0 {
        return Err(Error::DegenerateGraph(
            "every similarity weight underflowed; the adjacency is empty".into(),
        ));
    }
    Ok(SparseMatrix::from_csr(
        big_n, big_n, row_ptr, col_idx, values, true,
    ))
}

/// Forms the normalized Laplacian (D - Omega)/||Omega||_F from a symmetric,
/// zero-diagonal, nonnegative adjacency.
pub fn build_laplacian(omega: &SparseMatrix) -> Result<SparseMatrix> {
    let n = omega.n_rows();
    if omega.n_cols() != n {
        return Err(Error::Config(format!(
            "adjacency must be square, got {}x{}",
            n,
            omega.n_cols()
        )));
    }
    for (i, j, v) in omega.iter() {
        if i == j {
            return Err(Error::Config(format!(
                "adjacency carries a diagonal entry at ({i}, {i})"
            )));
        }
        if v < 0.0 {
            return Err(Error::Config(format!(
                "adjacency weight at ({i}, {j}) is negative: {v}"
            )));
        }
    }
    if !omega.is_symmetric_tagged() && !omega.symmetry_holds() {
        return Err(Error::Config("adjacency is not symmetric".into()));
    }
    let frob = omega.frobenius_norm();
    if frob == 0.0 {
        return Err(Error::DegenerateGraph(
            "adjacency has Frobenius norm zero; cannot normalize the Laplacian".into(),
        ));
    }
    let inv = 1.0 / frob;

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(omega.nnz() + n);
    let mut values = Vec::with_capacity(omega.nnz() + n);
    row_ptr.push(0);
    for i in 0..n {
        let (cols, vals) = omega.row(i);
        let degree: f64 = vals.iter().sum();
        let mut placed_diag = degree == 0.0;
        for (&j, &w) in cols.iter().zip(vals) {
            if !placed_diag && j > i {
                col_idx.push(i);
                values.push(degree * inv);
                placed_diag = true;
            }
            col_idx.push(j);
            values.push(-w * inv);
        }
        if !placed_diag {
            col_idx.push(i);
            values.push(degree * inv);
        }
        row_ptr.push(col_idx.len());
    }
    Ok(SparseMatrix::from_csr(n, n, row_ptr, col_idx, values, true))
}

/// Sparse Laplacian action on an image, returned as a plain vector since
/// the output is signed.
pub fn laplacian_apply(l: &SparseMatrix, x: &Image) -> Result<Vec<f64>> {
    if l.n_cols() != x.len() || l.n_rows() != x.len() {
        return Err(Error::Config(format!(
            "laplacian_apply: operator is {}x{} but image has {} pixels",
            l.n_rows(),
            l.n_cols(),
            x.len()
        )));
    }
    Ok(l.matvec(x.data()))
}

/// Oracle Laplacian: the same construction with the exact image as the
/// reference. Infeasible in practice, used as an upper-bound baseline.
pub fn build_oracle_laplacian(x_true: &Image, cfg: &GraphConfig) -> Result<SparseMatrix> {
    build_laplacian(&build_adjacency(x_true, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_image, signed_vec};

    fn e1() -> f64 {
        (-1.0f64).exp()
    }

    #[test]
    fn constant_image_gives_complete_unit_graph() {
        let cfg = GraphConfig::new(1, 1.0).unwrap();
        let omega = build_adjacency(&Image::constant(2, 0.5), &cfg).unwrap();
        assert_eq!(omega.nnz(), 12);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 0.0 } else { 1.0 };
                assert_eq!(omega.get(i, j), expected);
            }
        }
    }

    #[test]
    fn checkerboard_weights_match_hand_enumeration() {
        // Pixels (0,1) and (1,1) hold value 1, the others 0; every pair is
        // within Chebyshev distance 1 on a 2x2 grid.
        let cfg = GraphConfig::new(1, 1.0).unwrap();
        let x = Image::new(2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let omega = build_adjacency(&x, &cfg).unwrap();
        let expected = [
            [0.0, e1(), 1.0, e1()],
            [e1(), 0.0, e1(), 1.0],
            [1.0, e1(), 0.0, e1()],
            [e1(), 1.0, e1(), 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(omega.get(i, j), expected[i][j], "entry ({i}, {j})");
            }
        }
    }

    #[test]
    fn adjacency_symmetric_with_zero_diagonal() {
        let cfg = GraphConfig::new(2, 0.05).unwrap();
        let omega = build_adjacency(&random_image(3, 6), &cfg).unwrap();
        assert!(omega.symmetry_holds());
        for i in 0..omega.n_rows() {
            assert_eq!(omega.get(i, i), 0.0);
        }
        for (_, _, v) in omega.iter() {
            assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn neighborhoods_truncate_at_borders() {
        // Corner pixel of a 4x4 grid with R=1 reaches only 3 neighbors; a
        // wrap-around graph would give it 8.
        let cfg = GraphConfig::new(1, 1.0).unwrap();
        let omega = build_adjacency(&Image::constant(4, 1.0), &cfg).unwrap();
        let (cols, _) = omega.row(0);
        assert_eq!(cols, &[1, 4, 5]);
        let (center_cols, _) = omega.row(lex_index(1, 1, 4));
        assert_eq!(center_cols.len(), 8);
    }

    #[test]
    fn nnz_per_row_bounded() {
        let cfg = GraphConfig::new(2, 0.1).unwrap();
        let omega = build_adjacency(&random_image(17, 8), &cfg).unwrap();
        let bound = (2 * cfg.radius() + 1) * (2 * cfg.radius() + 1) - 1;
        for i in 0..omega.n_rows() {
            assert!(omega.row(i).0.len() <= bound);
        }
    }

    #[test]
    fn underflowed_graph_is_degenerate() {
        // All pairwise differences at least 0.5 with sigma = 1e-4 push every
        // weight below the representable floor.
        let cfg = GraphConfig::new(1, 1e-4).unwrap();
        let x = Image::new(2, vec![0.0, 0.5, 1.0, 1.5]).unwrap();
        assert!(matches!(
            build_adjacency(&x, &cfg),
            Err(Error::DegenerateGraph(_))
        ));
    }

    #[test]
    fn laplacian_of_constant_graph_matches_closed_form() {
        // Omega = J - I on 4 nodes: D = 3I and ||Omega||_F = sqrt(12).
        let cfg = GraphConfig::new(1, 1.0).unwrap();
        let omega = build_adjacency(&Image::constant(2, 0.5), &cfg).unwrap();
        let l = build_laplacian(&omega).unwrap();
        let scale = 12f64.sqrt();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 3.0 / scale } else { -1.0 / scale };
                assert!((l.get(i, j) - expected).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn single_pair_laplacian() {
        let omega =
            SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let l = build_laplacian(&omega).unwrap();
        let s = 2f64.sqrt();
        assert!((l.get(0, 0) - 1.0 / s).abs() <= 1e-15);
        assert!((l.get(0, 1) + 1.0 / s).abs() <= 1e-15);
        assert!((l.get(1, 0) + 1.0 / s).abs() <= 1e-15);
        assert!((l.get(1, 1) - 1.0 / s).abs() <= 1e-15);
    }

    #[test]
    fn laplacian_annihilates_constants() {
        let cfg = GraphConfig::new(2, 0.02).unwrap();
        for seed in [1u64, 2, 3] {
            let l = build_oracle_laplacian(&random_image(seed, 5), &cfg).unwrap();
            let ones = vec![1.0; l.n_cols()];
            for v in l.matvec(&ones) {
                assert!(v.abs() <= 1e-12);
            }
            assert!(l.symmetry_holds());
        }
    }

    #[test]
    fn laplacian_rejects_bad_adjacency() {
        let with_diag = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0)]).unwrap();
        assert!(matches!(build_laplacian(&with_diag), Err(Error::Config(_))));
        let asymmetric = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0)]).unwrap();
        assert!(matches!(build_laplacian(&asymmetric), Err(Error::Config(_))));
        let negative =
            SparseMatrix::from_triplets(2, 2, vec![(0, 1, -1.0), (1, 0, -1.0)]).unwrap();
        assert!(matches!(build_laplacian(&negative), Err(Error::Config(_))));
        let empty = SparseMatrix::zeros(3, 3);
        assert!(matches!(
            build_laplacian(&empty),
            Err(Error::DegenerateGraph(_))
        ));
    }

    #[test]
    fn apply_matches_dense_product() {
        let cfg = GraphConfig::new(1, 0.5).unwrap();
        let x_ref = random_image(21, 3);
        let l = build_oracle_laplacian(&x_ref, &cfg).unwrap();
        let x = random_image(22, 3);
        let fast = laplacian_apply(&l, &x).unwrap();
        for i in 0..9 {
            let mut acc = 0.0;
            for j in 0..9 {
                acc += l.get(i, j) * x.data()[j];
            }
            assert!((fast[i] - acc).abs() <= 1e-14);
        }
    }

    #[test]
    fn apply_vanishes_away_from_plateau_borders() {
        // Two plateaus split at column 4, wider than R=1: rows of L touching
        // only same-plateau pixels annihilate x_ref itself. sigma keeps the
        // cross-plateau weight near 5e-6, far above rounding noise yet far
        // below the unit same-plateau weights.
        let n = 8;
        let mut x = Image::constant(n, 0.2);
        for i1 in 0..n {
            for i2 in 4..n {
                x.set(i1, i2, 0.9);
            }
        }
        let cfg = GraphConfig::new(1, 0.04).unwrap();
        let l = build_oracle_laplacian(&x, &cfg).unwrap();
        let lx = laplacian_apply(&l, &x).unwrap();
        let mut interior_max = 0.0f64;
        let mut border_l1 = 0.0;
        let mut total_l1 = 0.0;
        for i1 in 0..n {
            for i2 in 0..n {
                let v = lx[lex_index(i1, i2, n)].abs();
                total_l1 += v;
                if (3..=4).contains(&i2) {
                    border_l1 += v;
                } else {
                    interior_max = interior_max.max(v);
                }
            }
        }
        assert!(interior_max <= 1e-12, "interior leakage {interior_max}");
        assert!(border_l1 >= 0.999 * total_l1);
    }

    #[test]
    fn dirichlet_form_identity() {
        let cfg = GraphConfig::new(2, 0.04).unwrap();
        let x_ref = random_image(5, 4);
        let omega = build_adjacency(&x_ref, &cfg).unwrap();
        let l = build_laplacian(&omega).unwrap();
        let frob = omega.frobenius_norm();
        let v = signed_vec(6, 16);
        let lv = l.matvec(&v);
        let quad: f64 = v.iter().zip(&lv).map(|(a, b)| a * b).sum();
        let mut pair_sum = 0.0;
        for (i, j, w) in omega.iter() {
            if i < j {
                pair_sum += w * (v[i] - v[j]) * (v[i] - v[j]);
            }
        }
        let expected = pair_sum / frob;
        assert!((quad - expected).abs() <= 1e-12 * expected.max(1.0));
        assert!(quad >= -1e-12);
    }

    #[test]
    fn oracle_equals_plain_build_on_same_input() {
        let cfg = GraphConfig::new(1, 0.03).unwrap();
        let x = random_image(8, 4);
        let a = build_oracle_laplacian(&x, &cfg).unwrap();
        let b = build_laplacian(&build_adjacency(&x, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaling_round_trip() {
        let cfg = GraphConfig::new(1, 0.5).unwrap();
        let x_ref = random_image(12, 4);
        let omega = build_adjacency(&x_ref, &cfg).unwrap();
        let l = build_laplacian(&omega).unwrap();
        // Rebuild D - Omega and compare its Frobenius norm against the
        // scaled result times ||Omega||_F.
        let mut unscaled = l.clone();
        unscaled.scale(omega.frobenius_norm());
        let diff = unscaled.frobenius_norm() / l.frobenius_norm();
        assert!((diff - omega.frobenius_norm()).abs() <= 1e-12 * omega.frobenius_norm());
    }
}
