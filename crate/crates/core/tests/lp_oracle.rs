//! Cross-checks the simplex against brute-force vertex enumeration on
//! random small instances with finite bounds. For a bounded nonempty
//! feasible region the optimum sits on a vertex, so enumerating all basic
//! points is an exhaustive, solver-independent oracle.

use nonsparse_infer::linalg::{DenseMatrix, DenseVector};
use nonsparse_infer::lp::{solve_lp, LpProblem, LpStatus};
use nonsparse_infer::rng::RngStream;

struct Instance {
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn random_instance(rng: &mut RngStream) -> Instance {
    let d = 2 + (rng.next_u64() % 5) as usize; // 2..=6
    let m = 2 + (rng.next_u64() % 9) as usize; // 2..=10
    let unif = |rng: &mut RngStream, lo: f64, hi: f64| lo + (hi - lo) * rng.next_f64();
    let c: Vec<f64> = (0..d).map(|_| unif(rng, -2.0, 2.0)).collect();
    let a: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| unif(rng, -2.0, 2.0)).collect())
        .collect();
    let b: Vec<f64> = (0..m).map(|_| unif(rng, -1.0, 3.0)).collect();
    let lo: Vec<f64> = (0..d).map(|_| unif(rng, -2.0, 0.0)).collect();
    let hi: Vec<f64> = lo.iter().map(|&l| l + unif(rng, 0.5, 3.0)).collect();
    Instance { c, a, b, lo, hi }
}

/// Solves the square system with rows taken from the active-set candidates;
/// returns `None` for (near-)singular systems.
fn solve_square(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let d = rhs.len();
    let mut m: Vec<Vec<f64>> = rows.iter().cloned().collect();
    let mut r = rhs.to_vec();
    for col in 0..d {
        let (piv, pval) = (col..d)
            .map(|i| (i, m[i][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if pval < 1e-8 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        let p = m[col][col];
        for i in 0..d {
            if i != col {
                let f = m[i][col] / p;
                if f != 0.0 {
                    for j in col..d {
                        m[i][j] -= f * m[col][j];
                    }
                    r[i] -= f * r[col];
                }
            }
        }
    }
    Some((0..d).map(|i| r[i] / m[i][i]).collect())
}

/// Minimum of `cᵀx` over all feasible vertices, or `None` when no vertex is
/// feasible (an empty feasible set, since the box bounds keep it compact).
fn enumerate_min(inst: &Instance) -> Option<f64> {
    let d = inst.c.len();
    // candidate active constraints: every row as equality, every bound
    let mut normals: Vec<Vec<f64>> = Vec::new();
    let mut offsets: Vec<f64> = Vec::new();
    for (row, &bi) in inst.a.iter().zip(&inst.b) {
        normals.push(row.clone());
        offsets.push(bi);
    }
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        normals.push(e.clone());
        offsets.push(inst.lo[j]);
        normals.push(e);
        offsets.push(inst.hi[j]);
    }
    let total = normals.len();
    let mut best: Option<f64> = None;
    let mut picks: Vec<usize> = (0..d).collect();
    loop {
        let rows: Vec<Vec<f64>> = picks.iter().map(|&i| normals[i].clone()).collect();
        let rhs: Vec<f64> = picks.iter().map(|&i| offsets[i]).collect();
        if let Some(x) = solve_square(&rows, &rhs) {
            let feasible = inst
                .a
                .iter()
                .zip(&inst.b)
                .all(|(row, &bi)| {
                    row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() <= bi + 1e-9
                })
                && x.iter()
                    .zip(inst.lo.iter().zip(&inst.hi))
                    .all(|(&v, (&l, &h))| v >= l - 1e-9 && v <= h + 1e-9);
            if feasible {
                let obj: f64 = inst.c.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        // next combination of size d out of total
        let mut i = d;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if picks[i] + (d - i) < total {
                picks[i] += 1;
                for k in (i + 1)..d {
                    picks[k] = picks[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn to_problem(inst: &Instance) -> LpProblem {
    let rows: Vec<&[f64]> = inst.a.iter().map(|r| r.as_slice()).collect();
    LpProblem::new(
        DenseVector::from_vec(inst.c.clone()),
        DenseMatrix::from_rows(&rows).unwrap(),
        DenseVector::from_vec(inst.b.clone()),
        DenseVector::from_vec(inst.lo.clone()),
        DenseVector::from_vec(inst.hi.clone()),
    )
    .unwrap()
}

#[test]
fn simplex_matches_vertex_enumeration_on_100_instances() {
    let mut rng = RngStream::from_seed(0x1f2e3d4c);
    let mut optimal = 0;
    let mut infeasible = 0;
    for trial in 0..100 {
        let inst = random_instance(&mut rng);
        let problem = to_problem(&inst);
        let sol = solve_lp(&problem, 0).unwrap();
        let oracle = enumerate_min(&inst);
        match (sol.status, oracle) {
            (LpStatus::Optimal, Some(best)) => {
                optimal += 1;
                assert!(
                    (sol.objective_value - best).abs() <= 1e-8,
                    "trial {trial}: simplex {} vs oracle {best}",
                    sol.objective_value
                );
                assert!(problem.row_violation(&sol.x) <= 1e-7, "trial {trial}");
                assert!(problem.bound_violation(&sol.x) <= 1e-9, "trial {trial}");
            }
            (LpStatus::Infeasible, None) => infeasible += 1,
            (status, oracle) => panic!(
                "trial {trial}: solver {status:?} vs oracle {:?}",
                oracle.map(|_| "feasible")
            ),
        }
    }
    // the generator must exercise both outcomes
    assert!(optimal >= 20, "only {optimal} optimal instances");
    assert!(infeasible >= 5, "only {infeasible} infeasible instances");
}
