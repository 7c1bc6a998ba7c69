use super::cutoff::CutoffSpec;
use super::functions::{AngularSF, RadialSF};
use crate::data::Element;
use crate::{Error, Result};

/// Default angular exponents.
pub const DEFAULT_ZETAS: [f64; 3] = [1.0, 4.0, 16.0];

/// Gaussian widths `eta_m = (n^(m/n) / r_c)^2` for `m = 0..=n`.
pub fn radial_widths(n: usize, r_c: f64) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::InvalidParameter("width grid needs n >= 1".into()));
    }
    CutoffSpec::new(r_c)?;
    let nf = n as f64;
    Ok((0..=n)
        .map(|m| {
            let w = nf.powf(m as f64 / nf) / r_c;
            w * w
        })
        .collect())
}

/// Radial functions for one neighbor element.
///
/// The first `n + 1` functions are centered at the atom with widths from
/// [`radial_widths`]. The remaining `n` sit on the shifted grid
/// `R_s = r_c / n^(m/n)`, `m = 0..n`, each with width
/// `1 / (R_s,m - R_s,m+1)^2` so they get narrow close to the atom.
pub fn generate_radial_params(n: usize, r_c: f64, neighbor: &Element) -> Result<Vec<RadialSF>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "radial parameter grid needs n >= 2, got {n}"
        )));
    }
    let cutoff = CutoffSpec::new(r_c)?;
    let mut out = Vec::with_capacity(2 * n + 1);
    for eta in radial_widths(n, r_c)? {
        out.push(RadialSF::new(eta, 0.0, cutoff, neighbor.clone())?);
    }
    let nf = n as f64;
    let shift = |m: usize| r_c / nf.powf(m as f64 / nf);
    for m in 0..n {
        let spacing = shift(m) - shift(m + 1);
        out.push(RadialSF::new(1.0 / (spacing * spacing), shift(m), cutoff, neighbor.clone())?);
    }
    Ok(out)
}

/// Angular functions for one neighbor pair: every combination of the
/// `n_eta + 1` widths, `lambda = +-1` and the given exponents.
pub fn generate_angular_params(
    n_eta: usize,
    zetas: &[f64],
    r_c: f64,
    pair: (&Element, &Element),
) -> Result<Vec<AngularSF>> {
    if zetas.is_empty() {
        return Err(Error::InvalidParameter("empty zeta list".into()));
    }
    for (i, z) in zetas.iter().enumerate() {
        if zetas[..i].contains(z) {
            return Err(Error::InvalidParameter(format!("duplicate zeta {z}")));
        }
    }
    let cutoff = CutoffSpec::new(r_c)?;
    let mut out = Vec::new();
    for eta in radial_widths(n_eta, r_c)? {
        for lambda in [-1.0, 1.0] {
            for &zeta in zetas {
                out.push(AngularSF::new(eta, lambda, zeta, cutoff, pair.0.clone(), pair.1.clone())?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h() -> Element {
        Element::new("H").unwrap()
    }

    #[test]
    fn radial_grid_endpoints() {
        let rc = 12.0;
        let n = 5;
        let sfs = generate_radial_params(n, rc, &h()).unwrap();
        assert_eq!(sfs.len(), 2 * n + 1);
        assert!((sfs[0].eta - 1.0 / (rc * rc)).abs() < 1e-15);
        assert!((sfs[n].eta - (n * n) as f64 / (rc * rc)).abs() < 1e-13);
        assert!(sfs[..=n].iter().all(|s| s.r_s == 0.0));
        assert_eq!(sfs[n + 1].r_s, rc);
        let last = &sfs[2 * n];
        let expected = rc / (n as f64).powf((n - 1) as f64 / n as f64);
        assert!((last.r_s - expected).abs() < 1e-12);
        // shifted functions get narrower toward the atom
        assert!(sfs[n + 1..].windows(2).all(|w| w[1].eta > w[0].eta && w[1].r_s < w[0].r_s));
    }

    #[test]
    fn radial_needs_two_points() {
        assert!(generate_radial_params(1, 12.0, &h()).is_err());
        assert!(generate_radial_params(3, 0.0, &h()).is_err());
    }

    #[test]
    fn angular_counts() {
        let hh = (&h(), &h());
        assert_eq!(generate_angular_params(1, &[1.0], 12.0, hh).unwrap().len(), 4);
        assert_eq!(generate_angular_params(2, &DEFAULT_ZETAS, 12.0, hh).unwrap().len(), 18);
        assert!(generate_angular_params(2, &[], 12.0, hh).is_err());
        assert!(generate_angular_params(2, &[1.0, 4.0, 1.0], 12.0, hh).is_err());
        assert!(generate_angular_params(2, &[0.5], 12.0, hh).is_err());
    }
}
