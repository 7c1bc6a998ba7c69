use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::cutoff::CutoffSpec;
use super::evaluate::compute_descriptors;
use super::functions::{AngularSF, RadialSF, SymmetryFunction};
use super::params::{generate_angular_params, generate_radial_params};
use crate::data::{Dataset, Element};
use crate::{Error, Result};

/// Min/max/mean of one function over a fitting set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl ScaleStats {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    /// Range too small to divide by.
    pub fn is_constant(&self) -> bool {
        self.range() <= 1e-12 * self.max.abs().max(self.min.abs()).max(1e-300)
    }
}

/// Functions of one center element.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ElementFunctions {
    pub functions: Vec<SymmetryFunction>,
    pub scaling: Option<Vec<ScaleStats>>,
}

impl ElementFunctions {
    /// Number of values produced by `compute_descriptors` when scaled
    /// (constant functions dropped) or unscaled.
    pub fn width(&self, scaled: bool) -> usize {
        match (&self.scaling, scaled) {
            (Some(stats), true) => stats.iter().filter(|s| !s.is_constant()).count(),
            _ => self.functions.len(),
        }
    }
}

/// Symmetry functions per center element.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DescriptorSet {
    elements: BTreeMap<Element, ElementFunctions>,
}

impl DescriptorSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Full candidate pool for the given elements: every radial grid for
    /// every neighbor element and every angular grid for every unordered
    /// neighbor pair.
    pub fn candidate_pool(
        elements: &[Element],
        n_radial: usize,
        n_eta: usize,
        zetas: &[f64],
        r_c: f64,
    ) -> Result<Self> {
        let mut sorted = elements.to_vec();
        sorted.sort();
        sorted.dedup();
        let mut set = DescriptorSet::new();
        for center in &sorted {
            let mut functions = Vec::new();
            for nb in &sorted {
                functions.extend(
                    generate_radial_params(n_radial, r_c, nb)?
                        .into_iter()
                        .map(SymmetryFunction::Radial),
                );
            }
            for (i, a) in sorted.iter().enumerate() {
                for b in &sorted[i..] {
                    functions.extend(
                        generate_angular_params(n_eta, zetas, r_c, (a, b))?
                            .into_iter()
                            .map(SymmetryFunction::Angular),
                    );
                }
            }
            set.insert(center.clone(), functions)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, element: Element, functions: Vec<SymmetryFunction>) -> Result<()> {
        for f in &functions {
            f.validate()?;
        }
        self.elements.insert(element, ElementFunctions { functions, scaling: None });
        Ok(())
    }

    pub fn get(&self, element: &Element) -> Option<&ElementFunctions> {
        self.elements.get(element)
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.elements.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, &ElementFunctions)> {
        self.elements.iter()
    }

    pub fn is_scaled(&self) -> bool {
        !self.elements.is_empty() && self.elements.values().all(|e| e.scaling.is_some())
    }

    /// Input width for an element's network.
    pub fn input_width(&self, element: &Element) -> Result<usize> {
        let funcs = self
            .get(element)
            .ok_or_else(|| Error::UnknownElement(element.to_string()))?;
        Ok(funcs.width(funcs.scaling.is_some()))
    }

    /// Largest cutoff over all functions.
    pub fn max_cutoff(&self) -> f64 {
        self.elements
            .values()
            .flat_map(|e| e.functions.iter())
            .map(|f| f.cutoff().r_c)
            .fold(0.0, f64::max)
    }

    /// Keeps only the listed functions (in the given order) for one element.
    /// Scaling stats, if any, follow their functions.
    pub fn select(&self, element: &Element, indices: &[usize]) -> Result<DescriptorSet> {
        let funcs = self
            .get(element)
            .ok_or_else(|| Error::UnknownElement(element.to_string()))?;
        let n = funcs.functions.len();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        let picked = ElementFunctions {
            functions: indices.iter().map(|&i| funcs.functions[i].clone()).collect(),
            scaling: funcs
                .scaling
                .as_ref()
                .map(|s| indices.iter().map(|&i| s[i]).collect()),
        };
        let mut out = self.clone();
        out.elements.insert(element.clone(), picked);
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut index = 0;
        let mut scales = Vec::new();
        for (center, funcs) in &self.elements {
            for (j, f) in funcs.functions.iter().enumerate() {
                match f {
                    SymmetryFunction::Radial(sf) => writeln!(
                        out,
                        "G2 {center} {} {:e} {:e} {:e}",
                        sf.neighbor, sf.eta, sf.r_s, sf.cutoff.r_c
                    ),
                    SymmetryFunction::Angular(sf) => writeln!(
                        out,
                        "G3 {center} {} {} {:e} {} {:e} {:e}",
                        sf.neighbors.0, sf.neighbors.1, sf.eta, sf.lambda, sf.zeta, sf.cutoff.r_c
                    ),
                }
                .unwrap();
                if let Some(stats) = &funcs.scaling {
                    scales.push((index, stats[j]));
                }
                index += 1;
            }
        }
        for (i, s) in scales {
            writeln!(out, "scale {i} {:e} {:e} {:e}", s.min, s.max, s.mean).unwrap();
        }
        out
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<DescriptorSet> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_with_name(&text, &path.display().to_string())
    }
}

/// Parses the text form written by [`DescriptorSet::to_text`].
pub fn parse_descriptor_set(text: &str) -> Result<DescriptorSet> {
    parse_with_name(text, "<descriptors>")
}

fn parse_with_name(text: &str, name: &str) -> Result<DescriptorSet> {
    let err = |line: usize, message: String| Error::Parse {
        path: name.to_string(),
        line,
        message,
    };
    // (center, position within its element) for every function line
    let mut order: Vec<(Element, usize)> = Vec::new();
    let mut set = DescriptorSet::new();
    let mut scales: Vec<(usize, usize, ScaleStats)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| err(lineno, format!("bad number '{}'", fields[i])))
        };
        let elem = |i: usize| Element::new(fields[i]).map_err(|e| err(lineno, e.to_string()));
        let expect = |n: usize| -> Result<()> {
            if fields.len() == n {
                Ok(())
            } else {
                Err(err(lineno, format!("{} line needs {n} fields, got {}", fields[0], fields.len())))
            }
        };
        let wrap = |r: Result<SymmetryFunction>| r.map_err(|e| err(lineno, e.to_string()));
        match fields[0] {
            "G2" => {
                expect(6)?;
                let center = elem(1)?;
                let f = wrap((|| {
                    let cutoff = CutoffSpec::new(num(5)?)?;
                    Ok(SymmetryFunction::Radial(RadialSF::new(num(3)?, num(4)?, cutoff, elem(2)?)?))
                })())?;
                push(&mut set, &mut order, center, f);
            }
            "G3" => {
                expect(8)?;
                let center = elem(1)?;
                let f = wrap((|| {
                    let cutoff = CutoffSpec::new(num(7)?)?;
                    Ok(SymmetryFunction::Angular(AngularSF::new(
                        num(4)?,
                        num(5)?,
                        num(6)?,
                        cutoff,
                        elem(2)?,
                        elem(3)?,
                    )?))
                })())?;
                push(&mut set, &mut order, center, f);
            }
            "scale" => {
                expect(5)?;
                let index: usize = fields[1]
                    .parse()
                    .map_err(|_| err(lineno, format!("bad index '{}'", fields[1])))?;
                let stats = ScaleStats {
                    min: num(2)?,
                    max: num(3)?,
                    mean: num(4)?,
                };
                if !(stats.min <= stats.mean && stats.mean <= stats.max) {
                    return Err(err(lineno, "scale stats need min <= mean <= max".into()));
                }
                scales.push((lineno, index, stats));
            }
            other => return Err(err(lineno, format!("unknown record '{other}'"))),
        }
    }
    if !scales.is_empty() {
        for e in set.elements.values_mut() {
            e.scaling = Some(vec![
                ScaleStats {
                    min: f64::NAN,
                    max: f64::NAN,
                    mean: f64::NAN
                };
                e.functions.len()
            ]);
        }
        for (lineno, index, stats) in scales {
            let (center, j) = order.get(index).ok_or_else(|| {
                err(lineno, format!("scale index {index} beyond {} functions", order.len()))
            })?;
            set.elements.get_mut(center).unwrap().scaling.as_mut().unwrap()[*j] = stats;
        }
        let complete = set
            .elements
            .values()
            .flat_map(|e| e.scaling.iter().flatten())
            .all(|s| !s.mean.is_nan());
        if !complete {
            return Err(Error::Format(format!("{name}: scaling stats missing for some functions")));
        }
    }
    Ok(set)
}

fn push(set: &mut DescriptorSet, order: &mut Vec<(Element, usize)>, center: Element, f: SymmetryFunction) {
    let entry = set.elements.entry(center.clone()).or_default();
    order.push((center, entry.functions.len()));
    entry.functions.push(f);
}

/// Min/max/mean of every function over all atoms of its center element in
/// `dataset`. Constant functions are kept in the set but skipped by scaled
/// evaluation.
pub fn fit_scaling(dataset: &Dataset, set: &DescriptorSet) -> Result<DescriptorSet> {
    dataset.require_non_empty("scaling fit")?;
    let mut acc: BTreeMap<Element, (Vec<f64>, Vec<f64>, Vec<f64>, usize)> = set
        .elements
        .iter()
        .map(|(e, f)| {
            let n = f.functions.len();
            (e.clone(), (vec![f64::INFINITY; n], vec![f64::NEG_INFINITY; n], vec![0.0; n], 0))
        })
        .collect();
    for s in dataset.iter() {
        let out = compute_descriptors(s, set, false)?;
        for (el, atom) in s.species.iter().zip(&out.atoms) {
            let (lo, hi, sum, count) = acc.get_mut(el).expect("element checked by compute_descriptors");
            for (j, &v) in atom.values.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
                sum[j] += v;
            }
            *count += 1;
        }
    }
    let mut fitted = set.clone();
    for (el, (lo, hi, sum, count)) in acc {
        if count == 0 {
            return Err(Error::MissingLabel(format!(
                "element {el} does not occur in the scaling dataset"
            )));
        }
        let stats: Vec<ScaleStats> = (0..lo.len())
            .map(|j| ScaleStats {
                min: lo[j],
                max: hi[j],
                mean: (sum[j] / count as f64).clamp(lo[j], hi[j]),
            })
            .collect();
        let constant = stats.iter().filter(|s| s.is_constant()).count();
        if constant > 0 {
            log::info!("element {el}: {constant} of {} symmetry functions are constant and dropped", stats.len());
        }
        fitted.elements.get_mut(&el).unwrap().scaling = Some(stats);
    }
    Ok(fitted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Structure;

    fn el(s: &str) -> Element {
        Element::new(s).unwrap()
    }

    fn water(shift: f64) -> Structure {
        Structure::new(
            vec![el("O"), el("H"), el("H")],
            vec![[0.0, 0.0, 0.0], [1.81 + shift, 0.0, 0.0], [-0.45, 1.75 - shift, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn pool_layout() {
        let set = DescriptorSet::candidate_pool(&[el("O"), el("H")], 3, 1, &[1.0, 4.0], 12.0).unwrap();
        // 2 neighbor elements * 7 radial + 3 pairs * 8 angular
        assert_eq!(set.get(&el("H")).unwrap().functions.len(), 2 * 7 + 3 * 8);
        assert_eq!(set.input_width(&el("O")).unwrap(), 38);
        assert!(set.input_width(&el("C")).is_err());
    }

    #[test]
    fn text_round_trip() {
        let set = DescriptorSet::candidate_pool(&[el("O"), el("H")], 2, 1, &[1.0], 6.0).unwrap();
        let ds: Dataset = vec![water(0.0), water(0.3)].into_iter().collect();
        let fitted = fit_scaling(&ds, &set).unwrap();
        let back = parse_descriptor_set(&fitted.to_text()).unwrap();
        assert_eq!(back, fitted);
        let plain = parse_descriptor_set(&set.to_text()).unwrap();
        assert_eq!(plain, set);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_descriptor_set("G2 H H 1.0 0.0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_descriptor_set("\nG2 H H -1.0 0.0 6.0"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_descriptor_set("G3 H H H 1.0 0.5 1.0 6.0"), Err(Error::Parse { .. })));
        assert!(parse_descriptor_set("G5 H").is_err());
        let text = "G2 H H 1.0 0.0 6.0\nG2 H H 0.5 0.0 6.0\nscale 0 0.1 0.2 0.15\n";
        assert!(matches!(parse_descriptor_set(text), Err(Error::Format(_))));
        assert!(parse_descriptor_set("G2 H H 1.0 0.0 6.0\nscale 4 0.1 0.2 0.15").is_err());
    }

    #[test]
    fn scaled_values_in_unit_interval_and_constants_dropped() {
        let set = DescriptorSet::candidate_pool(&[el("O"), el("H")], 3, 1, &[1.0, 4.0], 8.0).unwrap();
        let ds: Dataset = (0..5).map(|k| water(0.1 * k as f64)).collect();
        let fitted = fit_scaling(&ds, &set).unwrap();
        // O has no O neighbors: its O-O radial and O-O / H-O angular terms are constant zero
        let o = fitted.get(&el("O")).unwrap();
        let width = fitted.input_width(&el("O")).unwrap();
        assert!(width < o.functions.len());
        for s in ds.iter() {
            let out = compute_descriptors(s, &fitted, true).unwrap();
            for (e, a) in s.species.iter().zip(&out.atoms) {
                assert_eq!(a.values.len(), fitted.input_width(e).unwrap());
                assert!(a.values.iter().all(|v| (-1.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn single_structure_stats() {
        let set = DescriptorSet::candidate_pool(&[el("O"), el("H")], 2, 1, &[1.0], 8.0).unwrap();
        let s = water(0.0);
        let fitted = fit_scaling(&[s.clone()].into_iter().collect(), &set).unwrap();
        let raw = compute_descriptors(&s, &set, false).unwrap();
        let o = &fitted.get(&el("O")).unwrap().scaling.as_ref().unwrap();
        for (j, st) in o.iter().enumerate() {
            assert_eq!(st.min, raw.atoms[0].values[j]);
            assert_eq!(st.max, raw.atoms[0].values[j]);
        }
        // O appears once: every O function is constant
        assert_eq!(fitted.input_width(&el("O")).unwrap(), 0);
    }

    #[test]
    fn missing_element_in_fit() {
        let set = DescriptorSet::candidate_pool(&[el("O"), el("H")], 2, 1, &[1.0], 8.0).unwrap();
        let hh = Structure::new(vec![el("H"), el("H")], vec![[0.0; 3], [1.4, 0.0, 0.0]]).unwrap();
        assert!(fit_scaling(&[hh].into_iter().collect(), &set).is_err());
        assert!(fit_scaling(&Dataset::default(), &set).is_err());
    }

    #[test]
    fn select_subset() {
        let set = DescriptorSet::candidate_pool(&[el("H")], 2, 1, &[1.0], 8.0).unwrap();
        let sub = set.select(&el("H"), &[3, 0]).unwrap();
        let f = &sub.get(&el("H")).unwrap().functions;
        assert_eq!(f.len(), 2);
        assert_eq!(f[0], set.get(&el("H")).unwrap().functions[3]);
        assert!(set.select(&el("H"), &[99]).is_err());
    }
}
