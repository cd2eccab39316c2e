use serde::{Deserialize, Serialize};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Estimate {
    /// Mean and standard error of `values`, summed in iteration order.
    /// An empty input gives NaN mean and zero count.
    pub fn from_samples<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut acc = Accumulator::default();
        for v in values {
            acc.push(v);
        }
        acc.estimate()
    }
}

/// Running mean/variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn estimate(&self) -> Estimate {
        if self.n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                count: 0,
            };
        }
        let stderr = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean: self.mean,
            stderr,
            count: self.n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let e = Estimate::from_samples([1.0, 2.0, 3.0, 4.0]);
        assert!((e.mean - 2.5).abs() < 1e-15);
        // sample variance 5/3, stderr = sqrt(5/3/4)
        assert!((e.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(e.count, 4);
        assert_eq!(Estimate::from_samples([]).count, 0);
    }
}
