//! Minimal tape-based reverse-mode differentiation over `f64` vectors.
//!
//! Every node on the [`Tape`] holds a flat vector value. Operations are
//! recorded in evaluation order, so a single backward sweep over the node
//! list in reverse accumulates exact adjoints for every leaf. The op set is
//! exactly what the fixture models and the trainer need: dense layers,
//! elementwise activations, bump sums and softmax cross-entropy.
//!
//! ```
//! use samp_core::autodiff::Tape;
//!
//! let mut tape = Tape::new();
//! let w = tape.leaf(vec![1.0, 2.0, 3.0]); // 1×3 matrix
//! let x = tape.leaf(vec![1.0, 1.0, 1.0]);
//! let y = tape.matvec(w, x, 1, 3);
//! let out = tape.pick(y, 0);
//! assert_eq!(tape.scalar(out), 6.0);
//! let adj = tape.backward(out);
//! assert_eq!(adj.get(x), &[1.0, 2.0, 3.0]);
//! ```

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    /// `w` is `rows × cols`, row-major.
    MatVec {
        w: Var,
        x: Var,
        rows: usize,
        cols: usize,
    },
    Add(Var, Var),
    Relu(Var),
    Tanh(Var),
    Pick(Var, usize),
    /// `Σ_i exp(−((x_i − center) / width)²)`.
    BumpSum {
        x: Var,
        center: f64,
        width: f64,
    },
    /// `−log softmax(logits)[label]`; `probs` caches the softmax.
    SoftmaxCrossEntropy {
        logits: Var,
        label: usize,
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

/// Records a computation for one backward sweep.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints of every node with respect to one scalar output.
#[derive(Debug)]
pub struct Adjoints(Vec<Vec<f64>>);

impl Adjoints {
    pub fn get(&self, var: Var) -> &[f64] {
        &self.0[var.0]
    }

    pub fn take(&mut self, var: Var) -> Vec<f64> {
        std::mem::take(&mut self.0[var.0])
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, var: Var) -> &[f64] {
        &self.nodes[var.0].value
    }

    /// Value of a single-element node.
    pub fn scalar(&self, var: Var) -> f64 {
        let v = self.value(var);
        debug_assert_eq!(v.len(), 1);
        v[0]
    }

    pub fn matvec(&mut self, w: Var, x: Var, rows: usize, cols: usize) -> Var {
        let wv = self.value(w);
        let xv = self.value(x);
        assert_eq!(wv.len(), rows * cols, "matvec: weight size");
        assert_eq!(xv.len(), cols, "matvec: input size");
        let out = wv
            .chunks_exact(cols)
            .map(|row| row.iter().zip(xv).map(|(a, b)| a * b).sum())
            .collect();
        self.push(out, Op::MatVec { w, x, rows, cols })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        self.push(out, Op::Add(a, b))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).iter().map(|&v| v.max(0.0)).collect();
        self.push(out, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).iter().map(|v| v.tanh()).collect();
        self.push(out, Op::Tanh(a))
    }

    pub fn pick(&mut self, a: Var, index: usize) -> Var {
        let out = vec![self.value(a)[index]];
        self.push(out, Op::Pick(a, index))
    }

    pub fn bump_sum(&mut self, x: Var, center: f64, width: f64) -> Var {
        let out = self
            .value(x)
            .iter()
            .map(|&v| {
                let z = (v - center) / width;
                (-z * z).exp()
            })
            .sum();
        self.push(vec![out], Op::BumpSum { x, center, width })
    }

    pub fn softmax_cross_entropy(&mut self, logits: Var, label: usize) -> Var {
        let l = self.value(logits);
        let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = l.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let probs: Vec<f64> = exps.iter().map(|e| e / total).collect();
        let loss = -(probs[label].ln());
        self.push(
            vec![loss],
            Op::SoftmaxCrossEntropy {
                logits,
                label,
                probs,
            },
        )
    }

    /// Reverse sweep from the scalar node `output`.
    pub fn backward(&self, output: Var) -> Adjoints {
        let mut adj: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.len()])
            .collect();
        assert_eq!(adj[output.0].len(), 1, "backward needs a scalar output");
        adj[output.0][0] = 1.0;

        for idx in (0..=output.0).rev() {
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let upstream = std::mem::take(&mut adj[idx]);
            if upstream.iter().all(|&g| g == 0.0) {
                adj[idx] = upstream;
                continue;
            }
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatVec { w, x, rows, cols } => {
                    let (rows, cols) = (*rows, *cols);
                    let wv = &self.nodes[w.0].value;
                    let xv = &self.nodes[x.0].value;
                    for r in 0..rows {
                        let g = upstream[r];
                        if g == 0.0 {
                            continue;
                        }
                        let row = &wv[r * cols..(r + 1) * cols];
                        for c in 0..cols {
                            adj[x.0][c] += g * row[c];
                        }
                        let gw = &mut adj[w.0][r * cols..(r + 1) * cols];
                        for c in 0..cols {
                            gw[c] += g * xv[c];
                        }
                    }
                }
                Op::Add(a, b) => {
                    for (i, g) in upstream.iter().enumerate() {
                        adj[a.0][i] += g;
                        adj[b.0][i] += g;
                    }
                }
                Op::Relu(a) => {
                    let av = &self.nodes[a.0].value;
                    for (i, g) in upstream.iter().enumerate() {
                        // subgradient at 0 is 0
                        if av[i] > 0.0 {
                            adj[a.0][i] += g;
                        }
                    }
                }
                Op::Tanh(a) => {
                    for (i, g) in upstream.iter().enumerate() {
                        let t = node.value[i];
                        adj[a.0][i] += g * (1.0 - t * t);
                    }
                }
                Op::Pick(a, index) => {
                    adj[a.0][*index] += upstream[0];
                }
                Op::BumpSum { x, center, width } => {
                    let g = upstream[0];
                    let xv = &self.nodes[x.0].value;
                    for (i, &v) in xv.iter().enumerate() {
                        let z = (v - center) / width;
                        adj[x.0][i] += g * (-2.0 * z / width) * (-z * z).exp();
                    }
                }
                Op::SoftmaxCrossEntropy {
                    logits,
                    label,
                    probs,
                } => {
                    let g = upstream[0];
                    for (i, p) in probs.iter().enumerate() {
                        let indicator = if i == *label { 1.0 } else { 0.0 };
                        adj[logits.0][i] += g * (p - indicator);
                    }
                }
            }
            adj[idx] = upstream;
        }
        Adjoints(adj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize) -> f64 {
        let h = 1e-6 * (1.0 + x[i].abs());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    }

    #[test]
    fn tanh_chain_matches_differences() {
        let w = vec![0.3, -0.7, 1.1, 0.2, 0.5, -0.4];
        let eval = |x: &[f64]| {
            let mut t = Tape::new();
            let wv = t.leaf(w.clone());
            let xv = t.leaf(x.to_vec());
            let h = t.matvec(wv, xv, 2, 3);
            let a = t.tanh(h);
            let o = t.pick(a, 1);
            (t.scalar(o), t)
        };
        let x = [0.2, -0.1, 0.9];
        let (_, tape) = eval(&x);
        let out = Var(tape.nodes.len() - 1);
        let adj = tape.backward(out);
        for i in 0..3 {
            let fd = central_diff(|p| eval(p).0, &x, i);
            assert!((adj.get(Var(1))[i] - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn softmax_cross_entropy_gradient() {
        let mut t = Tape::new();
        let l = t.leaf(vec![1.0, 2.0, 0.5]);
        let loss = t.softmax_cross_entropy(l, 1);
        let adj = t.backward(loss);
        let f = |z: &[f64]| {
            let s: f64 = z.iter().map(|v| v.exp()).sum();
            -(z[1].exp() / s).ln()
        };
        for i in 0..3 {
            let fd = central_diff(f, &[1.0, 2.0, 0.5], i);
            assert!((adj.get(l)[i] - fd).abs() < 1e-8);
        }
        let s: f64 = adj.get(l).iter().sum();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn relu_kink_has_zero_subgradient() {
        let mut t = Tape::new();
        let x = t.leaf(vec![0.0, 1.0, -1.0]);
        let r = t.relu(x);
        let w = t.leaf(vec![1.0, 1.0, 1.0]);
        let s = t.matvec(w, r, 1, 3);
        let o = t.pick(s, 0);
        let adj = t.backward(o);
        assert_eq!(adj.get(x), &[0.0, 1.0, 0.0]);
    }
}
