use num_complex::Complex64;

use crate::linalg::{column_basis_c, smallest_right_singular_vectors, CMatrix, CVector};

fn leading_left_singular_vectors(m: &CMatrix, k: usize) -> Vec<CVector> {
    if k == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.into_iter().take(k).map(|i| u.column(i).into_owned()).collect()
}

fn normalized(chain: Vec<CVector>) -> Vec<CVector> {
    let scale = chain[0].norm();
    if scale == 0.0 {
        return chain;
    }
    let s = Complex64::new(1.0 / scale, 0.0);
    chain.into_iter().map(|v| v * s).collect()
}

/// Jordan chains of `N` at 0 from the nested null spaces
/// `staircase[k-1] = null(N^k)`. Each chain is `ξ₁ … ξ_s` with `N ξ₁ ≈ 0`,
/// `N ξ_k = ξ_{k−1}` and `‖ξ₁‖ = 1`.
pub fn jordan_chains(n: &CMatrix, staircase: &[CMatrix]) -> Vec<Vec<CVector>> {
    let depth = staircase.len();
    if depth == 0 {
        return Vec::new();
    }
    let p = n.nrows();
    let mut spaces = vec![CMatrix::zeros(p, 0)];
    spaces.extend(staircase.iter().cloned());
    let d = |k: usize| spaces[k.min(depth)].ncols() as isize;

    let mut taken: Vec<Vec<CVector>> = vec![Vec::new(); depth + 1];
    let mut chains = Vec::new();
    for k in (1..=depth).rev() {
        let fresh = ((d(k) - d(k - 1)) - (d(k + 1) - d(k))).max(0) as usize;
        if fresh == 0 {
            continue;
        }
        let lower = &spaces[k - 1];
        let mut cols: Vec<CVector> = lower.column_iter().map(|c| c.into_owned()).collect();
        cols.extend(taken[k].iter().map(|v| v.normalize()));
        let q = if cols.is_empty() {
            CMatrix::zeros(p, 0)
        } else {
            column_basis_c(&CMatrix::from_columns(&cols), 1e-8)
        };
        let wk = &spaces[k];
        let residual = wk - &q * (q.adjoint() * wk);
        for top in leading_left_singular_vectors(&residual, fresh) {
            let mut chain = vec![top];
            for j in 1..k {
                let next = n * chain.last().expect("chain is nonempty");
                taken[k - j].push(next.clone());
                chain.push(next);
            }
            chain.reverse();
            chains.push(normalized(chain));
        }
    }
    chains
}

/// `k` independent approximate null vectors of `N`, each a chain of length 1.
pub(crate) fn eigenvectors_only(n: &CMatrix, k: usize) -> Vec<Vec<CVector>> {
    let v = smallest_right_singular_vectors(n, k);
    v.column_iter().map(|c| vec![c.into_owned()]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn check(n: &CMatrix, chains: &[Vec<CVector>]) {
        for chain in chains {
            assert!((n * &chain[0]).norm() <= 1e-10);
            for k in 1..chain.len() {
                assert!((n * &chain[k] - &chain[k - 1]).norm() <= 1e-10 * chain[k - 1].norm());
            }
        }
    }

    #[test]
    fn blocks_of_sizes_three_and_one() {
        let mut n = CMatrix::zeros(4, 4);
        n[(0, 1)] = c64(1.0, 0.0);
        n[(1, 2)] = c64(1.0, 0.0);
        let stairs = crate::spectral::null_staircase(&n, 1.0, 4);
        assert_eq!(stairs.iter().map(|w| w.ncols()).collect::<Vec<_>>(), vec![2, 3, 4]);
        let chains = jordan_chains(&n, &stairs);
        let mut lens: Vec<usize> = chains.iter().map(|c| c.len()).collect();
        lens.sort();
        assert_eq!(lens, vec![1, 3]);
        check(&n, &chains);
    }

    #[test]
    fn similarity_transformed_block() {
        let mut j = CMatrix::zeros(3, 3);
        j[(0, 1)] = c64(1.0, 0.0);
        let x = CMatrix::from_row_slice(3, 3, &[
            c64(1.0, 0.0), c64(2.0, 0.0), c64(0.0, 1.0),
            c64(0.0, 0.0), c64(1.0, 0.0), c64(3.0, 0.0),
            c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0),
        ]);
        let xi = x.clone().try_inverse().unwrap();
        let n = &x * j * xi;
        let stairs = crate::spectral::null_staircase(&n, 4.0, 3);
        let chains = jordan_chains(&n, &stairs);
        assert_eq!(chains.iter().map(|c| c.len()).max(), Some(2));
        assert_eq!(chains.len(), 2);
        check(&n, &chains);
    }
}
