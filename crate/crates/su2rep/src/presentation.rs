//! Finitely presented groups as generator counts plus relator words, with
//! the exponent-sum homology test for integral homology spheres.

use kuranishi::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::quat::{Quat, ONE};

/// Word in the free group: (generator index, nonzero exponent) pairs.
pub type Word = Vec<(usize, i64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPresentation {
    pub generators: Vec<String>,
    pub relators: Vec<Word>,
}

impl GroupPresentation {
    pub fn new(generators: Vec<String>, relators: Vec<Word>) -> Result<Self> {
        GroupPresentation { generators, relators }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.generators.is_empty() {
            return Err(Error::invalid("$.generators", "at least one generator required"));
        }
        for (j, w) in self.relators.iter().enumerate() {
            if w.is_empty() {
                return Err(Error::invalid(format!("$.relators[{j}]"), "empty relator"));
            }
            for (pos, &(i, e)) in w.iter().enumerate() {
                if i >= self.generators.len() {
                    return Err(Error::invalid(
                        format!("$.relators[{j}][{pos}]"),
                        format!("generator index {i} out of range (g = {})", self.generators.len()),
                    ));
                }
                if e == 0 {
                    return Err(Error::invalid(format!("$.relators[{j}][{pos}]"), "zero exponent"));
                }
            }
        }
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: GroupPresentation = serde_json::from_str(text)
            .map_err(|e| Error::invalid("$", format!("presentation parse: {e}")))?;
        p.validated()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("presentation serialization")
    }

    pub fn g(&self) -> usize {
        self.generators.len()
    }

    /// Balanced: as many relators as generators.
    pub fn balanced(&self) -> bool {
        self.relators.len() == self.g()
    }

    /// Exponent-sum matrix, one row per relator.
    pub fn exponent_matrix(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.g()]; self.relators.len()];
        for (j, w) in self.relators.iter().enumerate() {
            for &(i, e) in w {
                m[j][i] += e;
            }
        }
        m
    }

    /// Abelianization test for balanced presentations: H₁ = 0 exactly when
    /// the exponent matrix has determinant ±1. The same matrix, tensored
    /// with the 3x3 identity, is the Fox Jacobian at the trivial
    /// representation, so the verdict also certifies that the trivial
    /// representation is isolated.
    pub fn homology_sphere_check(&self) -> Result<HomologyReport> {
        if !self.balanced() {
            return Err(Error::Unsupported(format!(
                "homology test needs a balanced presentation, got {} relators for {} generators",
                self.relators.len(),
                self.g()
            )));
        }
        let matrix = self.exponent_matrix();
        let det = int_det(&matrix);
        Ok(HomologyReport {
            matrix,
            det,
            homology_sphere: det.abs() == 1,
            trivial_rep_isolated: det != 0,
        })
    }

    /// Evaluates a word at unit quaternions; inverses are conjugates.
    pub fn word_eval(&self, word: &[(usize, i64)], q: &[Quat]) -> Result<Quat> {
        if q.len() != self.g() {
            return Err(Error::dim("representation tuple", self.g(), q.len()));
        }
        let mut acc = ONE;
        for &(i, e) in word {
            if i >= q.len() {
                return Err(Error::invalid("$.word", format!("generator index {i} out of range")));
            }
            acc = acc.mul(q[i].powi(e));
        }
        Ok(acc)
    }

    /// All relator values at once.
    pub fn relator_values(&self, q: &[Quat]) -> Result<Vec<Quat>> {
        self.relators.iter().map(|w| self.word_eval(w, q)).collect()
    }

    /// Max over relators of `||Im r_j||`; distance from being a representation.
    pub fn residual(&self, q: &[Quat]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for r in self.relator_values(q)? {
            worst = worst.max(r.im_norm()).max((r.norm() - 1.0).abs());
        }
        for qi in q {
            worst = worst.max((qi.norm() - 1.0).abs());
        }
        Ok(worst)
    }

    /// Fingerprint word list: generators, then products of distinct pairs.
    pub fn fingerprint_words(&self) -> Vec<Word> {
        let g = self.g();
        let mut words: Vec<Word> = (0..g).map(|i| vec![(i, 1)]).collect();
        for i in 0..g {
            for j in (i + 1)..g {
                words.push(vec![(i, 1), (j, 1)]);
            }
        }
        words
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomologyReport {
    pub matrix: Vec<Vec<i64>>,
    pub det: i64,
    pub homology_sphere: bool,
    pub trivial_rep_isolated: bool,
}

/// Integer determinant by fraction-free (Bareiss) elimination.
fn int_det(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            let swap = (k + 1..n).find(|&r| a[r][k] != 0);
            match swap {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0;
        }
        prev = a[k][k];
    }
    (sign * a[n - 1][n - 1]) as i64
}
