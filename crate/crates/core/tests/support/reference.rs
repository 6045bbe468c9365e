//! Straight-line reference for the sketch update: linear scans only, no
//! shared code with the library's search path.

pub struct ReferenceSketch {
    pub centres: Vec<f64>,
    pub weights: Vec<f64>,
    pub eta: f64,
}

impl ReferenceSketch {
    pub fn new(mut values: Vec<f64>, eta: f64) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let weights = vec![1.0; values.len()];
        Self {
            centres: values,
            weights,
            eta,
        }
    }

    pub fn nearest(&self, value: f64) -> usize {
        let mut best = 0;
        let mut best_dist = (self.centres[0] - value).abs();
        for i in 1..self.centres.len() {
            let d = (self.centres[i] - value).abs();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        if self.centres[best] < value {
            while best + 1 < self.centres.len() && self.centres[best + 1] == self.centres[best] {
                best += 1;
            }
        }
        best
    }

    /// Returns (output quantile, percentage).
    pub fn update(&mut self, value: f64) -> (f64, f64) {
        let idx = self.nearest(value);
        let old = self.weights[idx];
        let neighbour = if value >= self.centres[idx] {
            if idx == 0 {
                None
            } else {
                Some(idx - 1)
            }
        } else if idx + 1 < self.centres.len() {
            Some(idx + 1)
        } else {
            None
        };
        let mut pct = 0.0;
        match neighbour {
            Some(nb) => {
                let num = (self.centres[idx] - value).abs();
                let den = (self.centres[nb] - value).abs();
                if den != 0.0 {
                    pct = num / den;
                }
                self.weights[idx] = (1.0 - pct) * old + 1.0;
                self.weights[nb] += pct * old;
            }
            None => self.weights[idx] = old + 1.0,
        }
        self.centres[idx] = value;

        let mut total = 0.0;
        let mut prefix = 0.0;
        for (j, w) in self.weights.iter().enumerate() {
            total += w;
            if j == idx {
                prefix = total;
            }
        }
        (prefix / total, pct)
    }

    pub fn discount(&mut self) {
        for w in &mut self.weights {
            *w *= self.eta;
        }
    }
}
