//! Finite-difference stencil weights on integer offsets.

/// Weights `w` so that `Σ w[k] f(x0 + offsets[k]·h) / h^order ≈ f^(order)(x0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    pub offsets: Vec<isize>,
    pub weights: Vec<f64>,
}

/// Fornberg's recursion for derivative weights at `z` on arbitrary nodes.
pub fn fornberg(z: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > order, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

impl Stencil {
    pub fn from_offsets(offsets: Vec<isize>, order: usize) -> Self {
        let nodes: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
        let weights = fornberg(0.0, &nodes, order);
        Self { offsets, weights }
    }

    /// Fourth-order-accurate stencil for point `k` on a line of `n` points:
    /// central where it fits, otherwise a one-sided window clamped to the line.
    pub fn for_position(order: usize, k: usize, n: usize) -> Self {
        assert!(order >= 1 && n > order, "line too short for derivative order {order}");
        let half = (order + 1) / 2 + 1;
        if k >= half && k + half < n {
            let h = half as isize;
            return Self::from_offsets((-h..=h).collect(), order);
        }
        let width = (order + 4).min(n);
        let lo = if k < half { 0 } else { n - width };
        let offsets = (lo..lo + width).map(|p| p as isize - k as isize).collect();
        Self::from_offsets(offsets, order)
    }

    /// Applies the stencil to a strided line of samples.
    pub fn apply(&self, line: impl Fn(isize) -> f64, h: f64, order: usize) -> f64 {
        let s: f64 = self
            .offsets
            .iter()
            .zip(&self.weights)
            .map(|(&o, &w)| w * line(o))
            .sum();
        s / h.powi(order as i32)
    }
}

/// Derivative of `order` along `dim` of a gridded field, using
/// [`Stencil::for_position`] at every point.
pub fn derivative_field(
    field: &[f64],
    sizes: &[usize],
    steps: &[f64],
    dim: usize,
    order: usize,
) -> Vec<f64> {
    let n = sizes[dim];
    let stride: usize = sizes[dim + 1..].iter().product();
    let stencils: Vec<Stencil> = (0..n).map(|k| Stencil::for_position(order, k, n)).collect();
    let mut out = vec![0.0; field.len()];
    for (p, o) in out.iter_mut().enumerate() {
        let k = (p / stride) % n;
        let st = &stencils[k];
        *o = st.apply(
            |off| field[(p as isize + off * stride as isize) as usize],
            steps[dim],
            order,
        );
    }
    out
}

/// Transpose of [`derivative_field`]: maps `∂l/∂(D f)` to `∂l/∂f`.
pub fn derivative_field_transpose(
    grad: &[f64],
    sizes: &[usize],
    steps: &[f64],
    dim: usize,
    order: usize,
) -> Vec<f64> {
    let n = sizes[dim];
    let stride: usize = sizes[dim + 1..].iter().product();
    let stencils: Vec<Stencil> = (0..n).map(|k| Stencil::for_position(order, k, n)).collect();
    let scale = steps[dim].powi(order as i32);
    let mut out = vec![0.0; grad.len()];
    for (p, g) in grad.iter().enumerate() {
        let st = &stencils[(p / stride) % n];
        for (&o, &w) in st.offsets.iter().zip(&st.weights) {
            out[(p as isize + o * stride as isize) as usize] += w * g / scale;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn central_five_point_weights() {
        let s1 = Stencil::for_position(1, 5, 11);
        assert_eq!(s1.offsets, vec![-2, -1, 0, 1, 2]);
        let w: Vec<f64> = s1.weights.iter().map(|w| w * 12.0).collect();
        close(&w, &[1.0, -8.0, 0.0, 8.0, -1.0]);
        let s2 = Stencil::for_position(2, 5, 11);
        let w: Vec<f64> = s2.weights.iter().map(|w| w * 12.0).collect();
        close(&w, &[-1.0, 16.0, -30.0, 16.0, -1.0]);
    }

    #[test]
    fn one_sided_near_edges() {
        let s = Stencil::for_position(1, 0, 10);
        assert_eq!(s.offsets, vec![0, 1, 2, 3, 4]);
        let s = Stencil::for_position(2, 9, 10);
        assert_eq!(s.offsets, vec![-5, -4, -3, -2, -1, 0]);
        let s = Stencil::for_position(2, 1, 5);
        assert_eq!(s.offsets.len(), 5);
    }

    #[test]
    fn exact_on_quartics() {
        // every stencil here has fourth-order accuracy or better, so it is exact on
        // polynomials of degree <= order + 3
        let f = |x: f64| 0.3 - x + 0.7 * x * x - 0.2 * x.powi(3) + 0.05 * x.powi(4);
        let df = |x: f64| -1.0 + 1.4 * x - 0.6 * x * x + 0.2 * x.powi(3);
        let d2f = |x: f64| 1.4 - 1.2 * x + 0.6 * x * x;
        let h = 0.1;
        let n = 12;
        for k in 0..n {
            let line = |o: isize| f((k as isize + o) as f64 * h);
            let x = k as f64 * h;
            let s1 = Stencil::for_position(1, k, n);
            assert!((s1.apply(line, h, 1) - df(x)).abs() < 1e-9, "k={k}");
            let s2 = Stencil::for_position(2, k, n);
            let tol = if s2.offsets.len() == 5 { 1e-8 } else { 1e-7 };
            assert!((s2.apply(line, h, 2) - d2f(x)).abs() < tol, "k={k}");
        }
    }

    #[test]
    fn derivative_field_on_grid() {
        let sizes = [6, 7];
        let steps = [0.5, 0.25];
        let mut f = vec![0.0; 42];
        for t in 0..6 {
            for x in 0..7 {
                let (tt, xx) = (t as f64 * 0.5, x as f64 * 0.25);
                f[t * 7 + x] = tt * tt + 3.0 * xx * tt;
            }
        }
        let dt = derivative_field(&f, &sizes, &steps, 0, 1);
        let dx = derivative_field(&f, &sizes, &steps, 1, 1);
        for t in 0..6 {
            for x in 0..7 {
                let (tt, xx) = (t as f64 * 0.5, x as f64 * 0.25);
                assert!((dt[t * 7 + x] - (2.0 * tt + 3.0 * xx)).abs() < 1e-10);
                assert!((dx[t * 7 + x] - 3.0 * tt).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let sizes = [6usize, 7];
        let steps = [0.3, 0.2];
        let f: Vec<f64> = (0..42).map(|i| (0.37 * i as f64).sin()).collect();
        let g: Vec<f64> = (0..42).map(|i| (0.11 * i as f64).cos()).collect();
        for (dim, order) in [(0, 1), (1, 1), (1, 2)] {
            let df = derivative_field(&f, &sizes, &steps, dim, order);
            let dtg = derivative_field_transpose(&g, &sizes, &steps, dim, order);
            let lhs: f64 = df.iter().zip(&g).map(|(a, b)| a * b).sum();
            let rhs: f64 = f.iter().zip(&dtg).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        }
    }
}
