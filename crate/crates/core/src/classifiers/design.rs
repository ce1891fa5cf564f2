use ndarray::{Array2, ArrayView1};

/// A read-only feature matrix that only needs to support the two products
/// gradient descent on a linear model uses.
pub trait Design {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = X w`
    fn mul(&self, w: &[f64], out: &mut [f64]);
    /// `out = Xᵀ r`
    fn mul_t(&self, r: &[f64], out: &mut [f64]);
    /// Column means and population variances.
    fn column_moments(&self) -> (Vec<f64>, Vec<f64>);
    fn all_finite(&self) -> bool;
}

/// `out = xᵀ r`, accumulated row by row so reads stay contiguous.
fn transposed_product(x: &Array2<f64>, r: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (row, &ri) in x.outer_iter().zip(r) {
        if ri == 0.0 {
            continue;
        }
        match row.as_slice() {
            Some(row) => out.iter_mut().zip(row).for_each(|(o, v)| *o += ri * v),
            None => out.iter_mut().zip(row.iter()).for_each(|(o, v)| *o += ri * v),
        }
    }
}

fn dense_moments(x: &Array2<f64>, weights: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    let total: f64 = match weights {
        Some(w) => w.iter().sum(),
        None => x.nrows() as f64,
    };
    let total = total.max(1.0);
    let mut mean = vec![0.0; x.ncols()];
    let mut var = vec![0.0; x.ncols()];
    for (i, row) in x.outer_iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        for (m, v) in mean.iter_mut().zip(row) {
            *m += w * v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    for (i, row) in x.outer_iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += w * (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= total);
    (mean, var)
}

impl Design for Array2<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn mul(&self, w: &[f64], out: &mut [f64]) {
        let z = self.dot(&ArrayView1::from(w));
        out.copy_from_slice(z.as_slice().expect("contiguous"));
    }

    fn mul_t(&self, r: &[f64], out: &mut [f64]) {
        transposed_product(self, r, out);
    }

    fn column_moments(&self) -> (Vec<f64>, Vec<f64>) {
        dense_moments(self, None)
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Rows made of a per-group block shared by several samples followed by a
/// per-sample block: row `i` is `[shared[group[i]] ‖ own[i]]`.
///
/// Stores each match's prior vector once while every one of its windows is a sample.
#[derive(Debug, Clone)]
pub struct GroupedDesign {
    pub shared: Array2<f64>,
    pub own: Array2<f64>,
    pub group: Vec<usize>,
}

impl GroupedDesign {
    pub fn new(shared: Array2<f64>, own: Array2<f64>, group: Vec<usize>) -> Self {
        assert_eq!(own.nrows(), group.len());
        assert!(group.iter().all(|&g| g < shared.nrows()));
        GroupedDesign { shared, own, group }
    }

    fn group_sizes(&self) -> Vec<f64> {
        let mut n = vec![0.0; self.shared.nrows()];
        for &g in &self.group {
            n[g] += 1.0;
        }
        n
    }

    /// Materializes the dense matrix; meant for tests and small inputs.
    pub fn to_dense(&self) -> Array2<f64> {
        let (ds, dw) = (self.shared.ncols(), self.own.ncols());
        let mut out = Array2::zeros((self.group.len(), ds + dw));
        for (i, &g) in self.group.iter().enumerate() {
            let mut row = out.row_mut(i);
            row.slice_mut(ndarray::s![..ds]).assign(&self.shared.row(g));
            row.slice_mut(ndarray::s![ds..]).assign(&self.own.row(i));
        }
        out
    }
}

impl Design for GroupedDesign {
    fn rows(&self) -> usize {
        self.group.len()
    }

    fn cols(&self) -> usize {
        self.shared.ncols() + self.own.ncols()
    }

    fn mul(&self, w: &[f64], out: &mut [f64]) {
        let ds = self.shared.ncols();
        let zs = self.shared.dot(&ArrayView1::from(&w[..ds]));
        let zo = self.own.dot(&ArrayView1::from(&w[ds..]));
        for (i, (&g, o)) in self.group.iter().zip(out.iter_mut()).enumerate() {
            *o = zs[g] + zo[i];
        }
    }

    fn mul_t(&self, r: &[f64], out: &mut [f64]) {
        let ds = self.shared.ncols();
        let mut per_group = vec![0.0; self.shared.nrows()];
        for (&g, ri) in self.group.iter().zip(r) {
            per_group[g] += ri;
        }
        let (head, tail) = out.split_at_mut(ds);
        transposed_product(&self.shared, &per_group, head);
        transposed_product(&self.own, r, tail);
    }

    fn column_moments(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut mean, mut var) = dense_moments(&self.shared, Some(&self.group_sizes()));
        let (mo, vo) = dense_moments(&self.own, None);
        mean.extend(mo);
        var.extend(vo);
        (mean, var)
    }

    fn all_finite(&self) -> bool {
        self.shared.iter().chain(self.own.iter()).all(|v| v.is_finite())
    }
}
