use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::model::{MlpArchitecture, MlpModel};
use super::network::NetworkSpec;
use crate::data::{Element, NormParams};
use crate::descriptors::DescriptorSet;
use crate::{Error, Result};

const MAGIC: &str = "qnnp-model 1";

fn descriptor_path(model_path: &Path) -> PathBuf {
    let mut name = model_path.file_name().unwrap_or_default().to_os_string();
    name.push(".descriptors");
    model_path.with_file_name(name)
}

/// Writes the model to `path` and its descriptor set next to it
/// (`<path>.descriptors`, referenced by file name from the header).
pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let desc = descriptor_path(path);
    model.descriptors.write_file(&desc)?;
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "descriptors {}", desc.file_name().unwrap().to_string_lossy()).unwrap();
    let n = &model.norm;
    writeln!(out, "norm {:e} {:e} {:e}", n.mean_energy_per_atom, n.c_energy, n.c_length).unwrap();
    for (e, spec) in &model.arch.networks {
        writeln!(out, "network {e} {spec}").unwrap();
    }
    writeln!(out, "params {}", model.params.len()).unwrap();
    for p in &model.params {
        writeln!(out, "{p:e}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let err = |line: usize, message: String| Error::Parse {
        path: name.clone(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(err(1, format!("expected '{MAGIC}' header"))),
    }
    let mut desc_ref = None;
    let mut norm = None;
    let mut networks = BTreeMap::new();
    let mut params = Vec::new();
    let mut expected = None;
    for (lineno, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(lineno, format!("bad number '{s}'")));
        match fields[0] {
            "descriptors" if fields.len() == 2 => desc_ref = Some(fields[1].to_string()),
            "norm" if fields.len() == 4 => {
                norm = Some(NormParams {
                    mean_energy_per_atom: num(fields[1])?,
                    c_energy: num(fields[2])?,
                    c_length: num(fields[3])?,
                })
            }
            "network" if fields.len() == 5 => {
                let e = Element::new(fields[1]).map_err(|e| err(lineno, e.to_string()))?;
                let input = fields[2].parse().map_err(|_| err(lineno, "bad input width".into()))?;
                let hidden = fields[3]
                    .split(',')
                    .map(|h| h.parse::<usize>().map_err(|_| err(lineno, format!("bad layer width '{h}'"))))
                    .collect::<Result<Vec<_>>>()?;
                let activation = fields[4].parse().map_err(|e: Error| err(lineno, e.to_string()))?;
                networks.insert(e, NetworkSpec { input, hidden, activation });
            }
            "params" if fields.len() == 2 => {
                expected = Some(fields[1].parse::<usize>().map_err(|_| err(lineno, "bad parameter count".into()))?);
                break;
            }
            _ => return Err(err(lineno, format!("unexpected line '{line}'"))),
        }
    }
    let expected = expected.ok_or_else(|| Error::Format(format!("{name}: missing params section")))?;
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| err(lineno, format!("bad parameter '{line}'")))?;
        if !v.is_finite() {
            return Err(err(lineno, "non-finite parameter".into()));
        }
        params.push(v);
    }
    let arch = MlpArchitecture { networks };
    if params.len() != expected || params.len() != arch.n_params() {
        return Err(Error::Format(format!(
            "{name}: {} parameters, header says {expected}, architecture needs {}",
            params.len(),
            arch.n_params()
        )));
    }
    let desc_ref = desc_ref.ok_or_else(|| Error::Format(format!("{name}: missing descriptors line")))?;
    let norm = norm.ok_or_else(|| Error::Format(format!("{name}: missing norm line")))?;
    norm.validate()?;
    let descriptors = DescriptorSet::read_file(path.with_file_name(desc_ref))?;
    // re-run the shape checks of a fresh model
    let mut model = super::model::init_model(arch, descriptors, norm, 0)?;
    model.params = params;
    Ok(model)
}
