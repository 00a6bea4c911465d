//! Cubic radial-basis interpolation with a linear polynomial tail.
//!
//! Solves
//! ```text
//! [ Phi  P ] [w]   [f]
//! [ P^T  0 ] [a] = [0]      Phi_ij = |p_i - p_j|^3,  P_i = (1, u_i, v_i)
//! ```
//! so that `s(p) = sum_i w_i |p - p_i|^3 + a0 + a1 u + a2 v`.

use nalgebra::{DMatrix, DVector, LU, Dyn};

use crate::error::{Error, Result};

fn kernel(a: [f64; 2], b: [f64; 2]) -> f64 {
    let r = (a[0] - b[0]).hypot(a[1] - b[1]);
    r * r * r
}

#[derive(Clone, Debug)]
pub struct RbfInterpolant {
    nodes: Vec<[f64; 2]>,
    weights: Vec<f64>,
    poly: [f64; 3],
}

impl RbfInterpolant {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        let radial: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&n, w)| w * kernel(p, n))
            .sum();
        radial + self.poly[0] + self.poly[1] * p[0] + self.poly[2] * p[1]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn poly(&self) -> [f64; 3] {
        self.poly
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }
}

/// Factorised interpolation system for a fixed node set; fits any number of
/// value vectors with one LU decomposition.
#[derive(Clone, Debug)]
pub struct RbfSystem {
    nodes: Vec<[f64; 2]>,
    lu: LU<f64, Dyn, Dyn>,
}

impl RbfSystem {
    pub fn new(nodes: &[[f64; 2]]) -> Result<Self> {
        let n = nodes.len();
        if n < 3 {
            return Err(Error::Input(format!("RBF fit needs at least 3 nodes, got {n}")));
        }
        for i in 0..n {
            for j in 0..i {
                if kernel(nodes[i], nodes[j]) < 1e-30 {
                    return Err(Error::Input(format!("duplicate RBF nodes {j} and {i}")));
                }
            }
        }
        let m = n + 3;
        let mut a = DMatrix::<f64>::zeros(m, m);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = kernel(nodes[i], nodes[j]);
            }
            let row = [1.0, nodes[i][0], nodes[i][1]];
            for (k, v) in row.into_iter().enumerate() {
                a[(i, n + k)] = v;
                a[(n + k, i)] = v;
            }
        }
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::Input("RBF system is singular (collinear nodes?)".into()));
        }
        Ok(Self {
            nodes: nodes.to_vec(),
            lu,
        })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn fit(&self, values: &[f64]) -> Result<RbfInterpolant> {
        let n = self.nodes.len();
        if values.len() != n {
            return Err(Error::Input(format!("{} values for {n} RBF nodes", values.len())));
        }
        let mut rhs = DVector::<f64>::zeros(n + 3);
        rhs.rows_mut(0, n).copy_from_slice(values);
        let sol = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::Input("RBF system is singular".into()))?;
        Ok(RbfInterpolant {
            nodes: self.nodes.clone(),
            weights: sol.rows(0, n).iter().copied().collect(),
            poly: [sol[n], sol[n + 1], sol[n + 2]],
        })
    }

    /// Row-major `points x nodes` matrix `M` with `s(points) = M * values`.
    pub fn evaluation_operator(&self, points: &[[f64; 2]]) -> Vec<f64> {
        let n = self.nodes.len();
        let m = n + 3;
        // Basis rows B (points x (n+3)); operator = B * A^{-1}[:, :n].
        let mut inv_cols = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let mut e = DVector::<f64>::zeros(m);
            e[j] = 1.0;
            let col = self.lu.solve(&e).expect("invertibility checked at construction");
            inv_cols.set_column(j, &col);
        }
        let mut basis = DMatrix::<f64>::zeros(points.len(), m);
        for (r, &p) in points.iter().enumerate() {
            for (k, &node) in self.nodes.iter().enumerate() {
                basis[(r, k)] = kernel(p, node);
            }
            basis[(r, n)] = 1.0;
            basis[(r, n + 1)] = p[0];
            basis[(r, n + 2)] = p[1];
        }
        let op = basis * inv_cols;
        let mut out = Vec::with_capacity(points.len() * n);
        for r in 0..points.len() {
            out.extend(op.row(r).iter());
        }
        out
    }
}

pub fn fit_rbf(positions: &[[f64; 2]], values: &[f64]) -> Result<RbfInterpolant> {
    RbfSystem::new(positions)?.fit(values)
}
