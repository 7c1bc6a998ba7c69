use super::functions::{AngularSF, RadialSF, SymmetryFunction};
use super::set::DescriptorSet;
use crate::data::Structure;
use crate::{Error, Result};

/// Distances below this are treated as coincident atoms.
const MIN_DISTANCE: f64 = 1e-8;

/// Value of one symmetry function for one center atom and its sparse
/// gradient with respect to atomic positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub value: f64,
    /// `(atom, dG/dR_atom)` for the center and every neighbor inside the
    /// cutoff.
    pub gradient: Vec<(usize, [f64; 3])>,
}

/// Descriptors of one atom.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomDescriptors {
    pub values: Vec<f64>,
    /// Atoms the values depend on; `neighbors[0]` is the atom itself.
    pub neighbors: Vec<usize>,
    /// `gradients[j * neighbors.len() + m]` is dG_j / dR_(neighbors[m]).
    pub gradients: Vec<[f64; 3]>,
}

impl AtomDescriptors {
    /// Sparse gradient of function `j`.
    pub fn gradient(&self, j: usize) -> impl Iterator<Item = (usize, [f64; 3])> + '_ {
        let n = self.neighbors.len();
        self.neighbors
            .iter()
            .copied()
            .zip(self.gradients[j * n..(j + 1) * n].iter().copied())
    }

    pub fn n_functions(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorOutput {
    pub atoms: Vec<AtomDescriptors>,
}

/// Local environment of one atom: neighbors within `r_max`.
struct Environment {
    /// Global atom index; entry 0 is the center.
    atoms: Vec<usize>,
    /// `R_j - R_i` for every entry (zero for the center).
    vectors: Vec<[f64; 3]>,
    distances: Vec<f64>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn axpy(y: &mut [f64; 3], a: f64, x: [f64; 3]) {
    y[0] += a * x[0];
    y[1] += a * x[1];
    y[2] += a * x[2];
}

impl Environment {
    fn build(structure: &Structure, center: usize, r_max: f64) -> Result<Self> {
        let ri = structure.positions[center];
        let mut env = Environment {
            atoms: vec![center],
            vectors: vec![[0.0; 3]],
            distances: vec![0.0],
        };
        for (j, &rj) in structure.positions.iter().enumerate() {
            if j == center {
                continue;
            }
            let v = sub(rj, ri);
            let d = dot(v, v).sqrt();
            if d < MIN_DISTANCE {
                return Err(Error::Geometry(format!("atoms {center} and {j} coincide")));
            }
            if d < r_max {
                env.atoms.push(j);
                env.vectors.push(v);
                env.distances.push(d);
            }
        }
        Ok(env)
    }

    fn len(&self) -> usize {
        self.atoms.len()
    }
}

/// Adds the radial function to `grad` (indexed like `env.atoms`) and returns
/// its value.
fn radial(env: &Environment, structure: &Structure, sf: &RadialSF, grad: &mut [[f64; 3]]) -> f64 {
    let mut value = 0.0;
    for m in 1..env.len() {
        let j = env.atoms[m];
        if structure.species[j] != sf.neighbor {
            continue;
        }
        let r = env.distances[m];
        if r >= sf.cutoff.r_c {
            continue;
        }
        let (fc, dfc) = sf.cutoff.value_and_derivative(r);
        let dr = r - sf.r_s;
        let gauss = (-sf.eta * dr * dr).exp();
        value += gauss * fc;
        let dterm = gauss * (dfc - 2.0 * sf.eta * dr * fc) / r;
        axpy(&mut grad[m], dterm, env.vectors[m]);
        axpy(&mut grad[0], -dterm, env.vectors[m]);
    }
    value
}

fn angular(env: &Environment, structure: &Structure, sf: &AngularSF, grad: &mut [[f64; 3]]) -> f64 {
    let rc = sf.cutoff.r_c;
    let prefactor = 2f64.powf(1.0 - sf.zeta);
    let pair = |r: f64| -> (f64, f64) {
        // exp(-eta r^2) f_c(r) and its derivative
        let (fc, dfc) = sf.cutoff.value_and_derivative(r);
        let e = (-sf.eta * r * r).exp();
        (e * fc, e * (dfc - 2.0 * sf.eta * r * fc))
    };
    let mut value = 0.0;
    for a in 1..env.len() {
        let rij = env.distances[a];
        if rij >= rc {
            continue;
        }
        let (g_ij, dg_ij) = pair(rij);
        let va = env.vectors[a];
        for b in 1..env.len() {
            if a == b {
                continue;
            }
            let (j, k) = (env.atoms[a], env.atoms[b]);
            if !sf.matches(&structure.species[j], &structure.species[k]) {
                continue;
            }
            let rik = env.distances[b];
            if rik >= rc {
                continue;
            }
            let vb = env.vectors[b];
            let vjk = sub(vb, va);
            let rjk = dot(vjk, vjk).sqrt();
            if rjk >= rc {
                continue;
            }
            if rjk < MIN_DISTANCE {
                // coincident neighbors are rejected when the environment is built
                continue;
            }
            let (g_ik, dg_ik) = pair(rik);
            let (g_jk, dg_jk) = pair(rjk);
            let cos = (dot(va, vb) / (rij * rik)).clamp(-1.0, 1.0);
            let base = 1.0 + sf.lambda * cos;
            let ang = base.powf(sf.zeta);
            let dang = if base > 0.0 {
                sf.zeta * sf.lambda * base.powf(sf.zeta - 1.0)
            } else if sf.zeta == 1.0 {
                sf.lambda
            } else {
                0.0
            };
            let radial = g_ij * g_ik * g_jk;
            value += prefactor * ang * radial;

            // dT/dcos and dT/dr for the three distances
            let t_cos = prefactor * dang * radial;
            let t_ij = prefactor * ang * dg_ij * g_ik * g_jk / rij;
            let t_ik = prefactor * ang * g_ij * dg_ik * g_jk / rik;
            let t_jk = prefactor * ang * g_ij * g_ik * dg_jk / rjk;

            // dcos/dR_j and dcos/dR_k
            let inv = 1.0 / (rij * rik);
            let mut dc_j = [0.0; 3];
            axpy(&mut dc_j, inv, vb);
            axpy(&mut dc_j, -cos / (rij * rij), va);
            let mut dc_k = [0.0; 3];
            axpy(&mut dc_k, inv, va);
            axpy(&mut dc_k, -cos / (rik * rik), vb);

            let mut gj = [0.0; 3];
            axpy(&mut gj, t_cos, dc_j);
            axpy(&mut gj, t_ij, va);
            axpy(&mut gj, -t_jk, vjk);
            let mut gk = [0.0; 3];
            axpy(&mut gk, t_cos, dc_k);
            axpy(&mut gk, t_ik, vb);
            axpy(&mut gk, t_jk, vjk);
            for c in 0..3 {
                grad[a][c] += gj[c];
                grad[b][c] += gk[c];
                // translation invariance: the center takes minus the sum
                grad[0][c] -= gj[c] + gk[c];
            }
        }
    }
    value
}

fn contribution(env: &Environment, grad: Vec<[f64; 3]>, value: f64) -> Contribution {
    Contribution {
        value,
        gradient: env.atoms.iter().copied().zip(grad).collect(),
    }
}

fn check_center(structure: &Structure, center: usize) -> Result<()> {
    if center >= structure.n_atoms() {
        return Err(Error::IndexOutOfRange {
            index: center,
            len: structure.n_atoms(),
        });
    }
    Ok(())
}

/// Radial function of atom `center`.
pub fn eval_g2(center: usize, structure: &Structure, sf: &RadialSF) -> Result<Contribution> {
    check_center(structure, center)?;
    let env = Environment::build(structure, center, sf.cutoff.r_c)?;
    let mut grad = vec![[0.0; 3]; env.len()];
    let value = radial(&env, structure, sf, &mut grad);
    Ok(contribution(&env, grad, value))
}

/// Angular function of atom `center`.
pub fn eval_g3(center: usize, structure: &Structure, sf: &AngularSF) -> Result<Contribution> {
    check_center(structure, center)?;
    let env = Environment::build(structure, center, sf.cutoff.r_c)?;
    let mut grad = vec![[0.0; 3]; env.len()];
    let value = angular(&env, structure, sf, &mut grad);
    Ok(contribution(&env, grad, value))
}

/// Values and analytic gradients of every function of every atom.
///
/// With `scaled`, values are mapped through `(G - <G>) / (G_max - G_min)`,
/// gradients are divided by `G_max - G_min`, and functions flagged constant
/// during [`fit_scaling`](super::fit_scaling) are left out.
pub fn compute_descriptors(
    structure: &Structure,
    set: &DescriptorSet,
    scaled: bool,
) -> Result<DescriptorOutput> {
    let mut atoms = Vec::with_capacity(structure.n_atoms());
    for (i, element) in structure.species.iter().enumerate() {
        let funcs = set
            .get(element)
            .ok_or_else(|| Error::UnknownElement(element.to_string()))?;
        let stats = if scaled {
            Some(funcs.scaling.as_deref().ok_or_else(|| {
                Error::InvalidParameter(format!("scaling not fitted for element {element}"))
            })?)
        } else {
            None
        };
        let r_max = funcs
            .functions
            .iter()
            .map(|f| f.cutoff().r_c)
            .fold(0.0, f64::max);
        let env = Environment::build(structure, i, r_max)?;
        let n = env.len();
        let mut values = Vec::with_capacity(funcs.functions.len());
        let mut gradients = Vec::with_capacity(funcs.functions.len() * n);
        let mut grad = vec![[0.0; 3]; n];
        for (j, f) in funcs.functions.iter().enumerate() {
            grad.iter_mut().for_each(|g| *g = [0.0; 3]);
            let mut value = match f {
                SymmetryFunction::Radial(sf) => radial(&env, structure, sf, &mut grad),
                SymmetryFunction::Angular(sf) => angular(&env, structure, sf, &mut grad),
            };
            if let Some(stats) = stats {
                let s = &stats[j];
                if s.is_constant() {
                    continue;
                }
                let inv = 1.0 / s.range();
                value = (value - s.mean) * inv;
                grad.iter_mut().flatten().for_each(|g| *g *= inv);
            }
            values.push(value);
            gradients.extend_from_slice(&grad);
        }
        atoms.push(AtomDescriptors {
            values,
            neighbors: env.atoms,
            gradients,
        });
    }
    Ok(DescriptorOutput { atoms })
}
