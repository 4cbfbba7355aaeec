//! Small dense-vector helpers and compensated summation.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-coordinate Neumaier (improved Kahan) accumulator.
#[derive(Debug, Clone)]
pub struct CompensatedSum {
    sum: Vec<f64>,
    comp: Vec<f64>,
    count: usize,
}

impl CompensatedSum {
    pub fn new(dim: usize) -> Self {
        Self {
            sum: vec![0.0; dim],
            comp: vec![0.0; dim],
            count: 0,
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        for ((s, c), &v) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(x) {
            let t = *s + v;
            if s.abs() >= v.abs() {
                *c += (*s - t) + v;
            } else {
                *c += (v - t) + *s;
            }
            *s = t;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum
            .iter()
            .zip(&self.comp)
            .map(|(s, c)| (s + c) / n)
            .collect()
    }
}

/// Scalar Neumaier accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarSum {
    sum: f64,
    comp: f64,
}

impl ScalarSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Deterministic pairwise reduction over `0..count` leaves.
///
/// The tree shape depends only on `count`, so any scheduling of the leaves
/// yields bit-identical results.
pub(crate) fn pairwise_reduce<F>(count: usize, dim: usize, leaf: &F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    fn go<F: Fn(usize, &mut [f64]) + Sync>(lo: usize, hi: usize, dim: usize, leaf: &F) -> Vec<f64> {
        if hi - lo == 1 {
            let mut out = vec![0.0; dim];
            leaf(lo, &mut out);
            return out;
        }
        let mid = lo + (hi - lo) / 2;
        #[cfg(feature = "parallel")]
        let (mut a, b) = if hi - lo >= 8 {
            rayon::join(|| go(lo, mid, dim, leaf), || go(mid, hi, dim, leaf))
        } else {
            (go(lo, mid, dim, leaf), go(mid, hi, dim, leaf))
        };
        #[cfg(not(feature = "parallel"))]
        let (mut a, b) = (go(lo, mid, dim, leaf), go(mid, hi, dim, leaf));
        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
        a
    }
    if count == 0 {
        return vec![0.0; dim];
    }
    go(0, count, dim, leaf)
}
