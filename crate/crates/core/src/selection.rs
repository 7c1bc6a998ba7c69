//! Greedy CUR selection of columns (e.g. candidate symmetry functions) and
//! rows (e.g. configurations) of a feature matrix.
//!
//! Each step scores the columns of the residual matrix by the squared
//! entries of its leading right singular vectors, picks the best one and
//! projects it out of the remaining columns.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, Element};
use crate::descriptors::{compute_descriptors, DescriptorSet};
use crate::{Error, Result};

/// Relative gap under which neighboring singular values count as equal.
const DEGENERACY_TOL: f64 = 1e-9;
/// Relative score gap under which two columns tie.
const TIE_TOL: f64 = 1e-12;
/// Residual norm (relative to the input) treated as zero.
const EXHAUSTED_TOL: f64 = 1e-12;

/// `X[i][j]` = feature `j` of sample `i`, with a tag per row and column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: DMatrix<f64>,
    pub row_tags: Vec<String>,
    pub col_tags: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>, row_tags: Vec<String>, col_tags: Vec<String>) -> Result<Self> {
        if row_tags.len() != data.nrows() || col_tags.len() != data.ncols() {
            return Err(Error::LengthMismatch(format!(
                "{}x{} matrix with {} row tags and {} column tags",
                data.nrows(),
                data.ncols(),
                row_tags.len(),
                col_tags.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("feature matrix has non-finite entries".into()));
        }
        for tags in [&row_tags, &col_tags] {
            let mut seen = HashSet::new();
            if let Some(dup) = tags.iter().find(|t| !seen.insert(t.as_str())) {
                return Err(Error::InvalidParameter(format!("duplicate tag {dup:?}")));
            }
        }
        Ok(FeatureMatrix { data, row_tags, col_tags })
    }

    /// Matrix with numeric tags `0..M`, `0..N`.
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        let rows = (0..data.nrows()).map(|i| i.to_string()).collect();
        let cols = (0..data.ncols()).map(|j| j.to_string()).collect();
        Self::new(data, rows, cols)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::LengthMismatch("ragged feature rows".into()));
        }
        Self::from_matrix(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
    }

    pub fn transpose(&self) -> FeatureMatrix {
        FeatureMatrix {
            data: self.data.transpose(),
            row_tags: self.col_tags.clone(),
            col_tags: self.row_tags.clone(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }
}

/// Picks in order, with the relative reconstruction error after each pick.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub indices: Vec<usize>,
    pub tags: Vec<String>,
    pub errors: Vec<f64>,
    pub k: usize,
    /// The residual vanished before the target count was reached.
    pub exhausted: bool,
}

/// Singular values (descending) and matching right singular vectors as rows.
fn right_singular(x: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = DMatrix::from_fn(order.len(), x.ncols(), |r, c| v_t[(order[r], c)]);
    (sigma, v)
}

fn scores_from_svd(sigma: &[f64], v: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let n = v.ncols();
    let mut scores = vec![0.0; n];
    if sigma.is_empty() {
        return scores;
    }
    let tol = DEGENERACY_TOL * sigma[0].max(f64::MIN_POSITIVE);
    // singular vectors inside a degenerate cluster are only defined up to a
    // rotation; the cluster's contribution is spread evenly so the scores do
    // not depend on the basis the SVD happened to return
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < sigma.len() && (sigma[end - 1] - sigma[end]).abs() <= tol {
            end += 1;
        }
        let taken = (k.min(end) - start) as f64;
        let weight = taken / (end - start) as f64;
        for r in start..end {
            for (c, s) in scores.iter_mut().enumerate() {
                *s += weight * v[(r, c)] * v[(r, c)];
            }
        }
        start = end;
    }
    scores
}

fn check_k(x: &DMatrix<f64>, k: usize) -> Result<()> {
    let max_k = x.nrows().min(x.ncols());
    if k == 0 || k > max_k {
        return Err(Error::InvalidParameter(format!(
            "k must lie in 1..={max_k} for a {}x{} matrix, got {k}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

/// Column importance `pi_c = sum_(j<=k) (v_c^(j))^2` from the leading `k`
/// right singular vectors.
pub fn importance_scores(x: &FeatureMatrix, k: usize) -> Result<Vec<f64>> {
    check_k(&x.data, k)?;
    let (sigma, v) = right_singular(&x.data);
    Ok(scores_from_svd(&sigma, &v, k))
}

/// Removes the component along column `l` from every other column and
/// zeroes column `l`.
pub fn orthogonalize_against(x: &FeatureMatrix, l: usize) -> Result<FeatureMatrix> {
    let mut out = x.clone();
    project_out(&mut out.data, l)?;
    Ok(out)
}

fn project_out(x: &mut DMatrix<f64>, l: usize) -> Result<()> {
    if l >= x.ncols() {
        return Err(Error::IndexOutOfRange { index: l, len: x.ncols() });
    }
    let pivot: DVector<f64> = x.column(l).into_owned();
    let norm2 = pivot.norm_squared();
    if norm2 == 0.0 {
        return Err(Error::InvalidParameter(format!("pivot column {l} has zero norm")));
    }
    for j in 0..x.ncols() {
        if j == l {
            continue;
        }
        let coef = pivot.dot(&x.column(j)) / norm2;
        x.column_mut(j).axpy(-coef, &pivot, 1.0);
    }
    x.column_mut(l).fill(0.0);
    Ok(())
}

/// Greedy column selection. Stops after `n_target` picks, once the error
/// drops below `epsilon_stop`, or when the residual vanishes.
///
/// The error after each pick is [`cur_error`] with the picked columns and all
/// rows, i.e. the relative residual of projecting `X` onto the picked
/// columns.
pub fn select_columns(
    x: &FeatureMatrix,
    n_target: usize,
    k: usize,
    epsilon_stop: Option<f64>,
) -> Result<SelectionResult> {
    let n = x.ncols();
    if n_target > n {
        return Err(Error::InvalidParameter(format!(
            "cannot select {n_target} of {n} columns"
        )));
    }
    check_k(&x.data, k)?;
    let total = x.data.norm();
    if total == 0.0 {
        return Err(Error::DegenerateStatistics("feature matrix is all zero".into()));
    }
    let all_rows: Vec<usize> = (0..x.nrows()).collect();
    let mut residual = x.data.clone();
    let mut result = SelectionResult {
        indices: Vec::new(),
        tags: Vec::new(),
        errors: Vec::new(),
        k,
        exhausted: false,
    };
    let mut taken = vec![false; n];
    while result.indices.len() < n_target {
        if residual.norm() <= EXHAUSTED_TOL * total {
            result.exhausted = true;
            break;
        }
        let (sigma, v) = right_singular(&residual);
        let scores = scores_from_svd(&sigma, &v, k);
        let best = scores
            .iter()
            .enumerate()
            .filter(|(j, _)| !taken[*j])
            .fold(f64::NEG_INFINITY, |m, (_, &s)| m.max(s));
        let pick = (0..n)
            .find(|&j| !taken[j] && scores[j] >= best - TIE_TOL * best.abs().max(1.0))
            .expect("at least one untaken column");
        if residual.column(pick).norm() <= EXHAUSTED_TOL * total {
            result.exhausted = true;
            break;
        }
        project_out(&mut residual, pick)?;
        taken[pick] = true;
        result.indices.push(pick);
        result.tags.push(x.col_tags[pick].clone());
        let eps = cur_error(x, &result.indices, &all_rows)?;
        // projections onto nested subspaces cannot increase the error;
        // clamp round-off so the trace stays monotone
        let eps = result.errors.last().map_or(eps, |&prev: &f64| eps.min(prev));
        result.errors.push(eps);
        if epsilon_stop.is_some_and(|stop| eps < stop) {
            break;
        }
    }
    Ok(result)
}

/// Row selection: column selection on the transpose.
pub fn select_rows(x: &FeatureMatrix, n_target: usize, k: usize) -> Result<SelectionResult> {
    select_columns(&x.transpose(), n_target, k, None)
}

/// Moore-Penrose pseudoinverse with singular values below
/// `max(M, N) * sigma_max * 1e-12` treated as zero.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.is_empty() {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = a.nrows().max(a.ncols()) as f64 * smax * 1e-12;
    if smax == 0.0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    svd.pseudo_inverse(eps).expect("U and V were computed")
}

/// `||X - C U R||_F / ||X||_F` with `C = X[:, cols]`, `R = X[rows, :]`,
/// `U = C^+ X R^+`. An empty selection reconstructs nothing and gives 1.
pub fn cur_error(x: &FeatureMatrix, cols: &[usize], rows: &[usize]) -> Result<f64> {
    let total = x.data.norm();
    if total == 0.0 {
        return Err(Error::DegenerateStatistics("feature matrix is all zero".into()));
    }
    for &c in cols {
        if c >= x.ncols() {
            return Err(Error::IndexOutOfRange { index: c, len: x.ncols() });
        }
    }
    for &r in rows {
        if r >= x.nrows() {
            return Err(Error::IndexOutOfRange { index: r, len: x.nrows() });
        }
    }
    if cols.is_empty() || rows.is_empty() {
        return Ok(1.0);
    }
    let c = x.data.select_columns(cols);
    let r = x.data.select_rows(rows);
    let u = pseudo_inverse(&c) * &x.data * pseudo_inverse(&r);
    Ok((&x.data - c * u * r).norm() / total)
}

/// Rows are atoms of `element` across `dataset`, columns are that element's
/// functions, scaled with the set's stats when present. Constant functions
/// are left out; the returned indices map columns back to positions in the
/// element's function list.
pub fn atomic_feature_matrix(
    dataset: &Dataset,
    set: &DescriptorSet,
    element: &Element,
) -> Result<(FeatureMatrix, Vec<usize>)> {
    dataset.require_non_empty("feature matrix")?;
    let funcs = set
        .get(element)
        .ok_or_else(|| Error::UnknownElement(element.to_string()))?;
    let keep: Vec<usize> = match &funcs.scaling {
        Some(stats) => (0..stats.len()).filter(|&j| !stats[j].is_constant()).collect(),
        None => (0..funcs.functions.len()).collect(),
    };
    let mut rows = Vec::new();
    let mut tags = Vec::new();
    for (s_idx, s) in dataset.iter().enumerate() {
        let out = compute_descriptors(s, set, false)?;
        for (a, (el, atom)) in s.species.iter().zip(&out.atoms).enumerate() {
            if el != element {
                continue;
            }
            let row = keep
                .iter()
                .map(|&j| match &funcs.scaling {
                    Some(st) => (atom.values[j] - st[j].mean) / st[j].range(),
                    None => atom.values[j],
                })
                .collect::<Vec<_>>();
            rows.push(row);
            tags.push(format!("{s_idx}:{a}"));
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(format!("no {element} atoms in dataset")));
    }
    let data = DMatrix::from_fn(rows.len(), keep.len(), |i, j| rows[i][j]);
    let col_tags = keep.iter().map(|j| j.to_string()).collect();
    Ok((FeatureMatrix::new(data, tags, col_tags)?, keep))
}

/// One row per structure: for every element of the set (in order), the mean
/// scaled descriptor vector over that element's atoms (zeros if absent).
pub fn structure_feature_matrix(dataset: &Dataset, set: &DescriptorSet) -> Result<FeatureMatrix> {
    dataset.require_non_empty("feature matrix")?;
    if !set.is_scaled() {
        return Err(Error::InvalidParameter(
            "structure features need fitted descriptor scaling".into(),
        ));
    }
    let layout: Vec<(Element, usize)> = set
        .elements()
        .map(|e| Ok((e.clone(), set.input_width(e)?)))
        .collect::<Result<_>>()?;
    let width: usize = layout.iter().map(|(_, w)| w).sum();
    let mut data = DMatrix::zeros(dataset.len(), width);
    for (i, s) in dataset.iter().enumerate() {
        let out = compute_descriptors(s, set, true)?;
        let mut offset = 0;
        for (el, w) in &layout {
            let atoms: Vec<_> = s
                .species
                .iter()
                .zip(&out.atoms)
                .filter(|(e, _)| *e == el)
                .map(|(_, a)| a)
                .collect();
            for a in &atoms {
                for j in 0..*w {
                    data[(i, offset + j)] += a.values[j] / atoms.len() as f64;
                }
            }
            offset += w;
        }
    }
    let mut col_tags = Vec::with_capacity(width);
    for (el, w) in &layout {
        col_tags.extend((0..*w).map(|j| format!("{el}:{j}")));
    }
    let row_tags = (0..dataset.len()).map(|i| i.to_string()).collect();
    FeatureMatrix::new(data, row_tags, col_tags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn diagonal_scores() {
        let x = fm(&[&[3.0, 0.0], &[0.0, 1.0]]);
        let s = importance_scores(&x, 1).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-14 && s[1].abs() < 1e-14);
        let s2 = importance_scores(&x, 2).unwrap();
        assert!((s2.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(importance_scores(&x, 0).is_err());
        assert!(importance_scores(&x, 3).is_err());
    }

    #[test]
    fn identity_is_basis_independent() {
        let x = FeatureMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        let s = importance_scores(&x, 1).unwrap();
        for v in &s {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        let r = select_columns(&x, 3, 1, None).unwrap();
        assert_eq!(r.indices, vec![0, 1, 2]);
        assert!(r.errors[2] < 1e-14);
        assert!(!r.exhausted);
    }

    #[test]
    fn orthogonalization() {
        let x = fm(&[&[1.0, 0.0, 1.0, 2.0], &[0.0, 1.0, 0.0, 1.0]]);
        let o = orthogonalize_against(&x, 0).unwrap();
        assert_eq!(o.data.column(1), x.data.column(1));
        assert!(o.data.column(2).norm() < 1e-15);
        assert!(o.data.column(0).norm() == 0.0);
        assert!((o.data[(0, 3)]).abs() < 1e-15 && (o.data[(1, 3)] - 1.0).abs() < 1e-15);
        assert!(orthogonalize_against(&o, 0).is_err());
    }

    #[test]
    fn empty_and_errors() {
        let x = fm(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(cur_error(&x, &[], &[0]).unwrap(), 1.0);
        assert!(cur_error(&x, &[0, 1], &[0, 1]).unwrap() < 1e-12);
        assert!(cur_error(&x, &[2], &[0]).is_err());
        let z = fm(&[&[0.0, 0.0]]);
        assert!(cur_error(&z, &[0], &[0]).is_err());
        assert!(select_columns(&x, 3, 1, None).is_err());
        assert!(FeatureMatrix::new(DMatrix::zeros(1, 2), vec!["a".into()], vec!["b".into(), "b".into()]).is_err());
        assert!(FeatureMatrix::from_rows(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn early_stop_and_exhaustion() {
        // rank 1: everything after the first pick is exhausted
        let x = fm(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        let r = select_columns(&x, 3, 1, None).unwrap();
        assert_eq!(r.indices.len(), 1);
        assert!(r.exhausted);
        assert!(r.errors[0] < 1e-14);
        let y = fm(&[&[5.0, 0.0, 0.1], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.2]]);
        let r = select_columns(&y, 3, 1, Some(0.5)).unwrap();
        assert_eq!(r.indices, vec![0]);
    }
}
