//! Text structure files.
//!
//! ```text
//! begin
//! comment free text
//! atom <x> <y> <z> <elem> 0.0 0.0 <fx> <fy> <fz>
//! energy <E>
//! charge 0.0
//! end
//! ```
//!
//! Values are Hartree/Bohr. Structures written without force labels carry
//! zero force columns and the [`NO_FORCES_FLAG`] token in their comment;
//! structures without an energy omit the `energy` line. Lines starting with
//! `#` and blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::structure::{Dataset, Element, Structure};
use crate::{Error, Result};

pub const NO_FORCES_FLAG: &str = "[no-forces]";

pub fn parse_structures(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_with_name(&text, &path.display().to_string())
}

pub fn parse_structures_str(text: &str) -> Result<Dataset> {
    parse_with_name(text, "<input>")
}

struct Block {
    start_line: usize,
    species: Vec<Element>,
    positions: Vec<[f64; 3]>,
    forces: Vec<[f64; 3]>,
    energy: Option<f64>,
    comment: String,
}

fn parse_with_name(text: &str, name: &str) -> Result<Dataset> {
    let err = |line: usize, message: String| Error::Parse {
        path: name.to_string(),
        line,
        message,
    };
    let number = |line: usize, tok: &str| -> Result<f64> {
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(line, format!("expected a finite number, found {tok:?}")))
    };

    let mut structures = Vec::new();
    let mut block: Option<Block> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let fields: Vec<&str> = rest.split_whitespace().collect();
        match (keyword, block.as_mut()) {
            ("begin", None) => {
                block = Some(Block {
                    start_line: line_no,
                    species: Vec::new(),
                    positions: Vec::new(),
                    forces: Vec::new(),
                    energy: None,
                    comment: String::new(),
                })
            }
            ("begin", Some(b)) => {
                return Err(Error::Format(format!(
                    "{name}:{line_no}: nested begin (block opened at line {})",
                    b.start_line
                )))
            }
            ("comment", Some(b)) => b.comment = rest.trim().to_string(),
            ("atom", Some(b)) => {
                if fields.len() != 9 {
                    return Err(err(
                        line_no,
                        format!("atom line has {} fields, expected 10", fields.len() + 1),
                    ));
                }
                let element: Element = fields[3]
                    .parse()
                    .map_err(|_| err(line_no, format!("bad element {:?}", fields[3])))?;
                let mut v = [0.0; 8];
                for (slot, i) in v.iter_mut().zip([0, 1, 2, 4, 5, 6, 7, 8]) {
                    *slot = number(line_no, fields[i])?;
                }
                b.species.push(element);
                b.positions.push([v[0], v[1], v[2]]);
                b.forces.push([v[5], v[6], v[7]]);
            }
            ("energy", Some(b)) => {
                if fields.len() != 1 {
                    return Err(err(line_no, "energy line needs one value".into()));
                }
                if b.energy.is_some() {
                    return Err(Error::Format(format!(
                        "{name}:{line_no}: second energy line in block"
                    )));
                }
                b.energy = Some(number(line_no, fields[0])?);
            }
            ("charge", Some(_)) => {
                if fields.len() != 1 {
                    return Err(err(line_no, "charge line needs one value".into()));
                }
                number(line_no, fields[0])?;
            }
            ("end", Some(_)) => {
                let b = block.take().expect("inside block");
                if b.species.is_empty() {
                    return Err(Error::Format(format!(
                        "{name}:{}: block contains no atoms",
                        b.start_line
                    )));
                }
                let no_forces = b.comment.contains(NO_FORCES_FLAG);
                let comment = if no_forces {
                    b.comment.replace(NO_FORCES_FLAG, "").trim().to_string()
                } else {
                    b.comment
                };
                let s = Structure {
                    species: b.species,
                    positions: b.positions,
                    energy: b.energy,
                    forces: (!no_forces).then_some(b.forces),
                    comment,
                };
                s.validate()
                    .map_err(|e| Error::Format(format!("{name}:{line_no}: {e}")))?;
                structures.push(s);
            }
            (kw, None) => {
                return Err(err(line_no, format!("unexpected {kw:?} outside begin/end")))
            }
            (kw, Some(_)) => return Err(err(line_no, format!("unknown keyword {kw:?}"))),
        }
    }
    if let Some(b) = block {
        return Err(Error::Format(format!(
            "{name}:{}: block not terminated by end",
            b.start_line
        )));
    }
    Ok(Dataset::new(structures))
}

pub fn write_structures_string(dataset: &Dataset) -> String {
    let mut out = String::new();
    for s in dataset {
        out.push_str("begin\n");
        let comment = if s.forces.is_some() {
            s.comment.clone()
        } else if s.comment.is_empty() {
            NO_FORCES_FLAG.to_string()
        } else {
            format!("{} {NO_FORCES_FLAG}", s.comment)
        };
        if comment.is_empty() {
            out.push_str("comment\n");
        } else {
            let _ = writeln!(out, "comment {comment}");
        }
        for (i, (el, p)) in s.species.iter().zip(&s.positions).enumerate() {
            let f = s.forces.as_ref().map_or([0.0; 3], |f| f[i]);
            let _ = writeln!(
                out,
                "atom {:.16e} {:.16e} {:.16e} {} 0.0 0.0 {:.16e} {:.16e} {:.16e}",
                p[0], p[1], p[2], el, f[0], f[1], f[2]
            );
        }
        if let Some(e) = s.energy {
            let _ = writeln!(out, "energy {e:.16e}");
        }
        out.push_str("charge 0.0\nend\n");
    }
    out
}

pub fn write_structures(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_structures_string(dataset)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_BLOCK: &str = "\
# two hydrogens
begin
comment h2 test
atom 0.0 0.0 0.0 H 0.0 0.0 0.1 0.0 0.0
atom 1.4 0.0 0.0 H 0.0 0.0 -0.1 0.0 0.0
energy -1.137
charge 0.0
end
";

    #[test]
    fn parses_single_block() {
        let ds = parse_structures_str(ONE_BLOCK).unwrap();
        assert_eq!(ds.len(), 1);
        let s = &ds.structures[0];
        assert_eq!(s.energy, Some(-1.137));
        assert_eq!(s.n_atoms(), 2);
        assert_eq!(s.comment, "h2 test");
        assert_eq!(s.forces.as_ref().unwrap()[1], [-0.1, 0.0, 0.0]);
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let ds = parse_structures_str("# nothing here\n\n").unwrap();
        assert!(ds.is_empty());
        assert!(ds.require_non_empty("training").is_err());
    }

    #[test]
    fn short_atom_line_names_line() {
        let text = "begin\natom 0.0 0.0 0.0 H 0.0 0.0 0.1 0.0\nend\n";
        match parse_structures_str(text) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("9 fields"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_structures_str("begin\ncomment x\nend\n"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_structures_str("begin\natom 0 0 0 H 0 0 0 0 0\n"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            parse_structures_str("atom 0 0 0 H 0 0 0 0 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_structures_str("begin\natom 0 0 0 H 0 0 x 0 0\nend\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn round_trip_water() {
        let o: Element = "O".parse().unwrap();
        let h: Element = "H".parse().unwrap();
        let s = Structure::new(
            vec![o, h.clone(), h],
            vec![
                [0.1, -0.2, 0.3],
                [1.8088, 0.0, 1.0 / 3.0],
                [-0.453_523_7, 1.751_23, std::f64::consts::PI],
            ],
        )
        .unwrap()
        .with_energy(-76.012_345_678_901_23)
        .with_forces(vec![[0.01, 0.02, -0.03], [1e-17, 0.0, 0.5], [-0.01, -0.02, 2.0 / 3.0]])
        .with_comment("water sample");
        let ds = Dataset::new(vec![s]);
        let back = parse_structures_str(&write_structures_string(&ds)).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn missing_forces_written_as_zeros_with_flag() {
        let h: Element = "H".parse().unwrap();
        let s = Structure::new(vec![h.clone(), h], vec![[0.0; 3], [0.0, 0.0, 1.4]])
            .unwrap()
            .with_energy(-1.0);
        let ds = Dataset::new(vec![s]);
        let text = write_structures_string(&ds);
        assert!(text.contains(NO_FORCES_FLAG));
        assert!(text.contains("0.0 0.0 0.0000000000000000e0 0.0000000000000000e0"));
        let back = parse_structures_str(&text).unwrap();
        assert_eq!(back, ds);
        assert!(back.structures[0].forces.is_none());
    }

    #[test]
    fn empty_dataset_writes_empty_file() {
        assert_eq!(write_structures_string(&Dataset::default()), "");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("input.data");
        let ds = parse_structures_str(ONE_BLOCK).unwrap();
        write_structures(&ds, &path).unwrap();
        assert_eq!(parse_structures(&path).unwrap(), ds);
        assert!(matches!(
            parse_structures(dir.path().join("missing.data")),
            Err(Error::Io { .. })
        ));
    }
}
