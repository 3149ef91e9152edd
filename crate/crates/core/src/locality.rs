//! Deterministic local strategies, Bell functional bounds, and ℓ₁ distance
//! from a correlation to the local polytope by linear programming.

use serde::{Deserialize, Serialize};

use crate::construction::Scenario;
use crate::error::{Error, Result};
use crate::keyrate::Correlation;
use crate::simplex::{solve, SimplexStatus, StandardFormLp};

/// Default cap on the number of deterministic strategies.
pub const DEFAULT_VERTEX_CAP: u128 = 1_000_000;

/// Default cap on the LP tableau size (rows × columns); the distance LP
/// materializes one dense column per vertex, so huge scenarios are rejected
/// explicitly instead of thrashing.
pub const DEFAULT_LP_CELL_CAP: u128 = 20_000_000;

/// Default simplex pivot limit.
pub const DEFAULT_PIVOT_CAP: usize = 1_000_000;

/// Simplex pivot tolerance.
pub const PIVOT_TOL: f64 = 1e-10;

/// One local hidden-variable assignment: a fixed outcome per setting for
/// each party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl DeterministicStrategy {
    /// The (deterministic) correlation this strategy produces.
    pub fn correlation(&self, scenario: &Scenario) -> Result<Correlation> {
        let values = (0..scenario.alice_settings())
            .map(|x| {
                (0..scenario.bob_settings())
                    .map(|y| {
                        let mut block =
                            vec![vec![0.0; scenario.bob_outcomes[y]]; scenario.alice_outcomes[x]];
                        block[self.alice[x]][self.bob[y]] = 1.0;
                        block
                    })
                    .collect()
            })
            .collect();
        Correlation::new(scenario.clone(), values)
    }
}

/// Number of deterministic strategies Π k_A(x) · Π k_B(y), saturating.
pub fn vertex_count(scenario: &Scenario) -> u128 {
    scenario
        .alice_outcomes
        .iter()
        .chain(scenario.bob_outcomes.iter())
        .fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
}

/// Streaming enumeration of all deterministic strategies, mixed-radix order.
#[derive(Debug)]
pub struct VertexIterator {
    scenario: Scenario,
    current: Option<DeterministicStrategy>,
}

impl Iterator for VertexIterator {
    type Item = DeterministicStrategy;

    fn next(&mut self) -> Option<DeterministicStrategy> {
        let out = self.current.clone()?;
        // increment: Bob's last setting is the fastest digit
        let s = &self.scenario;
        let mut next = out.clone();
        let mut carry = true;
        for y in (0..s.bob_settings()).rev() {
            if !carry {
                break;
            }
            next.bob[y] += 1;
            if next.bob[y] < s.bob_outcomes[y] {
                carry = false;
            } else {
                next.bob[y] = 0;
            }
        }
        if carry {
            for x in (0..s.alice_settings()).rev() {
                next.alice[x] += 1;
                if next.alice[x] < s.alice_outcomes[x] {
                    carry = false;
                    break;
                }
                next.alice[x] = 0;
            }
        }
        self.current = if carry { None } else { Some(next) };
        Some(out)
    }
}

pub fn enumerate_vertices(scenario: &Scenario) -> Result<VertexIterator> {
    enumerate_vertices_with_cap(scenario, DEFAULT_VERTEX_CAP)
}

pub fn enumerate_vertices_with_cap(scenario: &Scenario, cap: u128) -> Result<VertexIterator> {
    scenario.validate()?;
    let count = vertex_count(scenario);
    if count > cap {
        return Err(Error::VertexCapExceeded { count, cap });
    }
    Ok(VertexIterator {
        scenario: scenario.clone(),
        current: Some(DeterministicStrategy {
            alice: vec![0; scenario.alice_settings()],
            bob: vec![0; scenario.bob_settings()],
        }),
    })
}

/// A linear functional on correlations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BellFunctional {
    pub scenario: Scenario,
    /// coefficients[x][y][a][b]
    pub c: Vec<Vec<Vec<Vec<f64>>>>,
}

impl BellFunctional {
    pub fn new(scenario: Scenario, c: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        let f = Self { scenario, c };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let s = &self.scenario;
        if self.c.len() != s.alice_settings() {
            return Err(Error::ScenarioMismatch(
                "functional has wrong number of Alice settings".into(),
            ));
        }
        for (x, per_y) in self.c.iter().enumerate() {
            if per_y.len() != s.bob_settings() {
                return Err(Error::ScenarioMismatch(
                    "functional has wrong number of Bob settings".into(),
                ));
            }
            for (y, block) in per_y.iter().enumerate() {
                if block.len() != s.alice_outcomes[x]
                    || block.iter().any(|row| row.len() != s.bob_outcomes[y])
                {
                    return Err(Error::ScenarioMismatch(format!(
                        "functional block ({x},{y}) has the wrong shape"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Value on a deterministic strategy: Σ_{x,y} c[x][y][λ_A(x)][λ_B(y)].
    pub fn value_on_strategy(&self, strategy: &DeterministicStrategy) -> f64 {
        let mut acc = 0.0;
        for (x, per_y) in self.c.iter().enumerate() {
            for (y, block) in per_y.iter().enumerate() {
                acc += block[strategy.alice[x]][strategy.bob[y]];
            }
        }
        acc
    }

    /// Value on a correlation: Σ c·p.
    pub fn value_on_correlation(&self, corr: &Correlation) -> Result<f64> {
        if corr.scenario() != &self.scenario {
            return Err(Error::ScenarioMismatch(
                "correlation and functional live on different scenarios".into(),
            ));
        }
        let mut acc = 0.0;
        for (x, per_y) in self.c.iter().enumerate() {
            for (y, block) in per_y.iter().enumerate() {
                for (a, row) in block.iter().enumerate() {
                    for (b, &cv) in row.iter().enumerate() {
                        acc += cv * corr.get(x, y, a, b);
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// Maximum of a functional over the local polytope, with an attaining vertex.
#[derive(Debug, Clone, Serialize)]
pub struct LocalBoundReport {
    pub bound: f64,
    pub argmax: DeterministicStrategy,
}

pub fn local_bound(f: &BellFunctional) -> Result<LocalBoundReport> {
    local_bound_with_cap(f, DEFAULT_VERTEX_CAP)
}

/// Convexity puts the maximum at a vertex, so plain enumeration suffices.
pub fn local_bound_with_cap(f: &BellFunctional, cap: u128) -> Result<LocalBoundReport> {
    f.validate()?;
    let mut best: Option<LocalBoundReport> = None;
    for strategy in enumerate_vertices_with_cap(&f.scenario, cap)? {
        let value = f.value_on_strategy(&strategy);
        match &best {
            Some(b) if b.bound >= value => {}
            _ => {
                best = Some(LocalBoundReport {
                    bound: value,
                    argmax: strategy,
                });
            }
        }
    }
    Ok(best.expect("scenario has at least one strategy"))
}

/// LP termination status for the distance computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationCap,
}

/// ℓ₁ distance to the local polytope with the optimal local model as witness.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceReport {
    /// Unnormalized entrywise ℓ₁ distance over the full (a,b,x,y) tensor.
    pub distance: f64,
    /// Same distance divided by the number of setting pairs.
    pub distance_per_setting_pair: f64,
    /// Sparse weights over enumeration-ordered vertices.
    pub weights: Vec<(usize, f64)>,
    pub iterations: usize,
    pub status: LpStatus,
}

pub fn l1_distance_to_local(corr: &Correlation) -> Result<DistanceReport> {
    l1_distance_to_local_with_caps(
        corr,
        DEFAULT_VERTEX_CAP,
        DEFAULT_LP_CELL_CAP,
        DEFAULT_PIVOT_CAP,
    )
}

/// Solves min Σ|p − Σ_v w_v p_v| over vertex weights w ≥ 0, Σw = 1, by
/// introducing a slack pair per tensor entry:
///
///   Σ_v w_v·p_v[e] + s⁺_e − s⁻_e = p[e]   for every entry e,
///   Σ_v w_v = 1,  minimize Σ_e (s⁺_e + s⁻_e).
///
/// Always feasible: any single vertex is a candidate q.
pub fn l1_distance_to_local_with_caps(
    corr: &Correlation,
    vertex_cap: u128,
    cell_cap: u128,
    pivot_cap: usize,
) -> Result<DistanceReport> {
    corr.validate()?;
    let scenario = corr.scenario();
    let n_vertices_u128 = vertex_count(scenario);
    if n_vertices_u128 > vertex_cap {
        return Err(Error::VertexCapExceeded {
            count: n_vertices_u128,
            cap: vertex_cap,
        });
    }
    let n_vertices = n_vertices_u128 as usize;

    let entries = entry_list(scenario);
    let n_entries = entries.len();
    let n_rows = n_entries + 1;
    let n_cols = n_vertices + 2 * n_entries;
    let cells = (n_rows as u128) * (n_cols as u128);
    if cells > cell_cap {
        return Err(Error::LpSizeExceeded {
            cells,
            cap: cell_cap,
        });
    }

    let mut rows = vec![vec![0.0; n_cols]; n_rows];
    for (v, strategy) in enumerate_vertices_with_cap(scenario, vertex_cap)?.enumerate() {
        for (e, &(x, y, a, b)) in entries.iter().enumerate() {
            if strategy.alice[x] == a && strategy.bob[y] == b {
                rows[e][v] = 1.0;
            }
        }
        rows[n_entries][v] = 1.0;
    }
    let mut rhs = vec![0.0; n_rows];
    for (e, &(x, y, a, b)) in entries.iter().enumerate() {
        rows[e][n_vertices + e] = 1.0; // s⁺
        rows[e][n_vertices + n_entries + e] = -1.0; // s⁻
        rhs[e] = corr.get(x, y, a, b).max(0.0);
    }
    rhs[n_entries] = 1.0;

    let mut objective = vec![0.0; n_cols];
    for c in objective.iter_mut().skip(n_vertices) {
        *c = 1.0;
    }

    let lp = StandardFormLp {
        objective,
        rows,
        rhs,
    };
    let solution = solve(&lp, PIVOT_TOL, pivot_cap);

    let status = match solution.status {
        SimplexStatus::Optimal => LpStatus::Optimal,
        SimplexStatus::Infeasible => LpStatus::Infeasible,
        SimplexStatus::IterationCap => LpStatus::IterationCap,
        SimplexStatus::Unbounded => {
            unreachable!("the distance objective is bounded below by zero")
        }
    };
    let weights: Vec<(usize, f64)> = solution.x[..n_vertices]
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 1e-12)
        .map(|(v, &w)| (v, w))
        .collect();
    let distance = solution.objective.max(0.0);
    let setting_pairs = (scenario.alice_settings() * scenario.bob_settings()) as f64;
    Ok(DistanceReport {
        distance,
        distance_per_setting_pair: distance / setting_pairs,
        weights,
        iterations: solution.iterations,
        status,
    })
}

fn entry_list(scenario: &Scenario) -> Vec<(usize, usize, usize, usize)> {
    let mut entries = Vec::new();
    for x in 0..scenario.alice_settings() {
        for y in 0..scenario.bob_settings() {
            for a in 0..scenario.alice_outcomes[x] {
                for b in 0..scenario.bob_outcomes[y] {
                    entries.push((x, y, a, b));
                }
            }
        }
    }
    entries
}

/// Convex mixture of vertices, e.g. the witness model of a distance report.
pub fn mixture_correlation(scenario: &Scenario, weights: &[(usize, f64)]) -> Result<Correlation> {
    let entries = entry_list(scenario);
    let mut tensor = vec![0.0; entries.len()];
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized { sum: total });
    }
    let lookup: std::collections::HashMap<usize, f64> = weights.iter().copied().collect();
    for (v, strategy) in enumerate_vertices(scenario)?.enumerate() {
        let Some(&w) = lookup.get(&v) else { continue };
        for (e, &(x, y, a, b)) in entries.iter().enumerate() {
            if strategy.alice[x] == a && strategy.bob[y] == b {
                tensor[e] += w;
            }
        }
    }
    // renormalize away LP round-off before the validating constructor
    let values = (0..scenario.alice_settings())
        .map(|x| {
            (0..scenario.bob_settings())
                .map(|y| {
                    let mut block =
                        vec![vec![0.0; scenario.bob_outcomes[y]]; scenario.alice_outcomes[x]];
                    for (e, &(ex, ey, a, b)) in entries.iter().enumerate() {
                        if ex == x && ey == y {
                            block[a][b] = tensor[e] / total;
                        }
                    }
                    block
                })
                .collect()
        })
        .collect();
    Correlation::new(scenario.clone(), values)
}

/// Unnormalized ℓ₁ distance Σ_{a,b,x,y} |p − q| between two correlations on
/// the same scenario.
pub fn l1_between(p: &Correlation, q: &Correlation) -> Result<f64> {
    if p.scenario() != q.scenario() {
        return Err(Error::ScenarioMismatch(
            "correlations live on different scenarios".into(),
        ));
    }
    let mut acc = 0.0;
    for (x, y, a, b) in entry_list(p.scenario()) {
        acc += (p.get(x, y, a, b) - q.get(x, y, a, b)).abs();
    }
    Ok(acc)
}

/// The CHSH functional in probability form, c[x][y][a][b] = (−1)^{a⊕b⊕xy};
/// local bound 2, algebraic maximum 4.
pub fn chsh_functional() -> BellFunctional {
    let scenario = Scenario::new(vec![2, 2], vec![2, 2]).unwrap();
    let c = (0..2)
        .map(|x| {
            (0..2)
                .map(|y| {
                    (0..2)
                        .map(|a| {
                            (0..2)
                                .map(|b| if (a + b + x * y) % 2 == 0 { 1.0 } else { -1.0 })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    BellFunctional::new(scenario, c).unwrap()
}
