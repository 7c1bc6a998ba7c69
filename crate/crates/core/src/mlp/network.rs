use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    /// `ln(1 + e^x)`
    Softplus,
}

impl Activation {
    /// `(sigma, sigma', sigma'')` at `x`.
    #[inline]
    pub fn eval(self, x: f64) -> (f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                let d = 1.0 - t * t;
                (t, d, -2.0 * t * d)
            }
            Activation::Softplus => {
                let s = 1.0 / (1.0 + (-x).exp());
                let v = if x > 30.0 { x } else { x.exp().ln_1p() };
                (v, s, s * (1.0 - s))
            }
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "softplus" => Ok(Activation::Softplus),
            _ => Err(Error::InvalidParameter(format!("unknown activation {s:?}"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Softplus => "softplus",
        })
    }
}

/// Shape of one element network: `input -> hidden... -> 1`, activation on
/// hidden layers, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "network needs a positive input width and at least one non-empty hidden layer: {self}"
            )));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every layer, output layer last.
    pub fn layers(&self) -> Vec<(usize, usize)> {
        let mut widths = vec![self.input];
        widths.extend(&self.hidden);
        widths.push(1);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Parameters per network: each layer stores its weights row-major
    /// (`fan_out x fan_in`) followed by its biases.
    pub fn n_params(&self) -> usize {
        self.layers().iter().map(|(i, o)| (i + 1) * o).sum()
    }
}

impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hidden: Vec<String> = self.hidden.iter().map(|h| h.to_string()).collect();
        write!(f, "{} {} {}", self.input, hidden.join(","), self.activation)
    }
}

/// Scratch space for one network evaluation.
#[derive(Debug, Default, Clone)]
pub(crate) struct Workspace {
    /// Per hidden layer: pre-activation, activation, sigma', sigma''.
    z: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    d1: Vec<Vec<f64>>,
    d2: Vec<Vec<f64>>,
    /// Tangent pre-activations and activations.
    zt: Vec<Vec<f64>>,
    at: Vec<Vec<f64>>,
    adj: Vec<f64>,
    adj_t: Vec<f64>,
    next: Vec<f64>,
    next_t: Vec<f64>,
}

impl Workspace {
    fn ensure(&mut self, spec: &NetworkSpec) {
        if self.z.len() == spec.hidden.len() && self.z.iter().zip(&spec.hidden).all(|(v, &h)| v.len() == h) {
            return;
        }
        let alloc = || spec.hidden.iter().map(|&h| vec![0.0; h]).collect::<Vec<_>>();
        self.z = alloc();
        self.a = alloc();
        self.d1 = alloc();
        self.d2 = alloc();
        self.zt = alloc();
        self.at = alloc();
    }
}

/// Forward pass storing intermediates; returns the output.
pub(crate) fn forward(spec: &NetworkSpec, params: &[f64], x: &[f64], ws: &mut Workspace) -> f64 {
    ws.ensure(spec);
    let layers = spec.layers();
    let mut off = 0;
    for (l, &(fan_in, fan_out)) in layers.iter().enumerate() {
        let w = &params[off..off + fan_in * fan_out];
        let b = &params[off + fan_in * fan_out..off + (fan_in + 1) * fan_out];
        off += (fan_in + 1) * fan_out;
        if l == spec.hidden.len() {
            let input: &[f64] = if l == 0 { x } else { &ws.a[l - 1] };
            return b[0] + dot(w, input);
        }
        let (prev, rest) = ws.a.split_at_mut(l);
        let input: &[f64] = if l == 0 { x } else { &prev[l - 1] };
        let (z, d1, d2) = (&mut ws.z[l], &mut ws.d1[l], &mut ws.d2[l]);
        for o in 0..fan_out {
            z[o] = b[o] + dot(&w[o * fan_in..(o + 1) * fan_in], input);
            let (v, g1, g2) = spec.activation.eval(z[o]);
            rest[0][o] = v;
            d1[o] = g1;
            d2[o] = g2;
        }
    }
    unreachable!("output layer always present")
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradient of the output with respect to the input after [`forward`].
pub(crate) fn input_gradient(spec: &NetworkSpec, params: &[f64], ws: &mut Workspace, out: &mut [f64]) {
    let layers = spec.layers();
    let offsets = offsets(&layers);
    let n_hidden = spec.hidden.len();
    let (fan_in, _) = layers[n_hidden];
    ws.adj.clear();
    ws.adj.extend_from_slice(&params[offsets[n_hidden]..offsets[n_hidden] + fan_in]);
    for l in (0..n_hidden).rev() {
        let (fan_in, fan_out) = layers[l];
        let w = &params[offsets[l]..offsets[l] + fan_in * fan_out];
        ws.next.clear();
        ws.next.resize(fan_in, 0.0);
        for o in 0..fan_out {
            let zbar = ws.adj[o] * ws.d1[l][o];
            if zbar != 0.0 {
                for (n, wv) in ws.next.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                    *n += zbar * wv;
                }
            }
        }
        std::mem::swap(&mut ws.adj, &mut ws.next);
    }
    out.copy_from_slice(&ws.adj);
}

fn offsets(layers: &[(usize, usize)]) -> Vec<usize> {
    let mut offs = Vec::with_capacity(layers.len());
    let mut off = 0;
    for &(i, o) in layers {
        offs.push(off);
        off += (i + 1) * o;
    }
    offs
}

/// Adds `d/dtheta [ybar * y(x) + (u . grad_x y)(x)]` to `grad`, where `u`
/// is an input-space direction (`None` for the plain energy term).
///
/// The directional derivative is carried forward as a tangent and the
/// combined objective is differentiated in one reverse sweep.
pub(crate) fn accumulate_param_gradient(
    spec: &NetworkSpec,
    params: &[f64],
    x: &[f64],
    u: Option<&[f64]>,
    ybar: f64,
    ws: &mut Workspace,
    grad: &mut [f64],
) {
    forward(spec, params, x, ws);
    let layers = spec.layers();
    let offsets = offsets(&layers);
    let n_hidden = spec.hidden.len();
    let tangent = u.is_some();
    if let Some(u) = u {
        for l in 0..n_hidden {
            let (fan_in, fan_out) = layers[l];
            let w = &params[offsets[l]..offsets[l] + fan_in * fan_out];
            for o in 0..fan_out {
                let input: &[f64] = if l == 0 { u } else { &ws.at[l - 1] };
                let zt = dot(&w[o * fan_in..(o + 1) * fan_in], input);
                ws.zt[l][o] = zt;
            }
            for o in 0..fan_out {
                ws.at[l][o] = ws.d1[l][o] * ws.zt[l][o];
            }
        }
    }

    // output layer: y = w . a + b, ydot = w . adot
    let (fan_in, _) = layers[n_hidden];
    let off = offsets[n_hidden];
    let ydot_bar = if tangent { 1.0 } else { 0.0 };
    {
        let a_prev = &ws.a[n_hidden - 1];
        for i in 0..fan_in {
            let mut g = ybar * a_prev[i];
            if tangent {
                g += ydot_bar * ws.at[n_hidden - 1][i];
            }
            grad[off + i] += g;
        }
        grad[off + fan_in] += ybar;
    }
    ws.adj.clear();
    ws.adj.extend(params[off..off + fan_in].iter().map(|w| w * ybar));
    ws.adj_t.clear();
    ws.adj_t.extend(params[off..off + fan_in].iter().map(|w| w * ydot_bar));

    for l in (0..n_hidden).rev() {
        let (fan_in, fan_out) = layers[l];
        let off = offsets[l];
        let w = &params[off..off + fan_in * fan_out];
        let a_prev: &[f64] = if l == 0 { x } else { &ws.a[l - 1] };
        let at_prev: Option<&[f64]> = match (u, l) {
            (None, _) => None,
            (Some(u), 0) => Some(u),
            (Some(_), _) => Some(&ws.at[l - 1]),
        };
        ws.next.clear();
        ws.next.resize(fan_in, 0.0);
        ws.next_t.clear();
        ws.next_t.resize(fan_in, 0.0);
        for o in 0..fan_out {
            let d1 = ws.d1[l][o];
            let mut zbar = ws.adj[o] * d1;
            let mut ztbar = 0.0;
            if tangent {
                ztbar = ws.adj_t[o] * d1;
                zbar += ws.adj_t[o] * ws.zt[l][o] * ws.d2[l][o];
            }
            let row = &w[o * fan_in..(o + 1) * fan_in];
            let grow = &mut grad[off + o * fan_in..off + (o + 1) * fan_in];
            for i in 0..fan_in {
                grow[i] += zbar * a_prev[i];
            }
            if let Some(at_prev) = at_prev {
                for i in 0..fan_in {
                    grow[i] += ztbar * at_prev[i];
                }
            }
            grad[off + fan_in * fan_out + o] += zbar;
            if l > 0 {
                for i in 0..fan_in {
                    ws.next[i] += zbar * row[i];
                    ws.next_t[i] += ztbar * row[i];
                }
            }
        }
        std::mem::swap(&mut ws.adj, &mut ws.next);
        std::mem::swap(&mut ws.adj_t, &mut ws.next_t);
    }
}
