//! Acceptance criteria 1 to 10, one line each. Runs with its own harness so
//! the per-criterion lines always print; exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use serde_json::Value;
use symhodge::hodge_engine::{cohomology_dim, lefschetz_rhs, Level, PolyOptions, Variant};
use symhodge::{make_grid, SymplecticModel};
use symhodge_cli::suites::{cohomology, decompose, gaffney, identities, operators, poincare};
use symhodge_cli::{run, ExperimentConfig, Report};

// pinned tolerances
const IDENTITY_TOL: f64 = 1e-12;
const IDENTITY_RUNTIME: Duration = Duration::from_secs(10);
const SYMBOL_TOL: f64 = 1e-12;
const MULTIPLIER_TOL: f64 = 1e-10;
const SINGULAR_FLOOR: f64 = 0.25 - 1e-10;
const COVECTORS: usize = 100;
const ORDER_SLACK: f64 = 0.2;
const DECOMPOSITION_TOL: f64 = 1e-8;
const DECOMPOSITION_SAMPLES: usize = 50;
const DECOMPOSITION_RUNTIME: Duration = Duration::from_secs(300);
const POINCARE_RESIDUAL: f64 = 1e-6;
const PAIRING_TOL: f64 = 0.01;
const GAFFNEY_REFINEMENT: f64 = 0.25;
const CONJUGATION_TOL: f64 = 1e-10;

type Outcome = Result<String, String>;

fn cfg(experiment: &str, n: usize) -> ExperimentConfig {
    ExperimentConfig { experiment: experiment.into(), n, out: PathBuf::from("acceptance-reports"), ..ExperimentConfig::default() }
}

fn suite(experiment: &str, n: usize) -> Report {
    run(&cfg(experiment, n)).unwrap_or_else(|e| panic!("{experiment} n={n}: {e:#}"))
}

fn col(rep: &Report, name: &str) -> usize {
    rep.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn s(v: &Value) -> &str {
    v.as_str().unwrap_or("")
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn c1_identities() -> Outcome {
    ensure(identities::TOL == IDENTITY_TOL, "identity tolerance drifted".into())?;
    let mut worst = 0.0f64;
    for n in 1..=2 {
        let t = Instant::now();
        let rep = suite("identities", n);
        let el = t.elapsed();
        let r = col(&rep, "residual");
        ensure(rep.rows.len() >= 5, format!("n={n}: only {} identities", rep.rows.len()))?;
        for row in &rep.rows {
            worst = worst.max(f(&row[r]));
            ensure(f(&row[r]) <= IDENTITY_TOL, format!("n={n} {}: {:e}", s(&row[1]), f(&row[r])))?;
        }
        ensure(el < IDENTITY_RUNTIME, format!("n={n} took {el:?}"))?;
    }
    Ok(format!("max residual {worst:.2e}"))
}

fn operator_reports() -> &'static [Report; 2] {
    use std::sync::OnceLock;
    static R: OnceLock<[Report; 2]> = OnceLock::new();
    R.get_or_init(|| [suite("operators", 1), suite("operators", 2)])
}

fn c2_symbols() -> Outcome {
    ensure(operators::SYMBOL_TOL == SYMBOL_TOL && operators::MULTIPLIER_TOL == MULTIPLIER_TOL, "symbol tolerances drifted".into())?;
    ensure(operators::SINGULAR_FLOOR == SINGULAR_FLOOR && operators::COVECTORS == COVECTORS, "singular-value floor drifted".into())?;
    let (mut formula, mut mult, mut smin) = (0.0f64, 0.0f64, f64::INFINITY);
    for rep in operator_reports() {
        let (g, nm, v) = (col(rep, "group"), col(rep, "name"), col(rep, "value"));
        let rows: Vec<_> = rep.rows.iter().filter(|r| s(&r[g]) == "symbol").collect();
        for tag in ["sigma(d) ", "sigma(dstar)", "sigma(dlam) ", "sigma(dlamstar)"] {
            ensure(rows.iter().any(|r| s(&r[nm]).starts_with(tag)), format!("missing {tag}"))?;
        }
        for r in rows {
            let name = s(&r[nm]);
            let x = f(&r[v]);
            if name.contains("adapted-frame") {
                formula = formula.max(x);
                ensure(x <= SYMBOL_TOL, format!("{name}: {x:e}"))?;
            } else if name.contains("multipliers") {
                mult = mult.max(x);
                ensure(x <= MULTIPLIER_TOL, format!("{name}: {x:e}"))?;
            } else if name.contains("singular") {
                smin = smin.min(x);
                ensure(x >= SINGULAR_FLOOR, format!("{name}: {x}"))?;
            }
        }
    }
    Ok(format!("formula error {formula:.1e}, multiplier deviation {mult:.1e}, min singular value {smin:.12}"))
}

fn c3_consistency() -> Outcome {
    ensure(operators::ORDER_SLACK == ORDER_SLACK, "order slack drifted".into())?;
    let mut lines = 0;
    let mut exact = 0;
    let mut worst = 0.0f64;
    for rep in operator_reports() {
        let (g, nm, v) = (col(rep, "group"), col(rep, "name"), col(rep, "value"));
        let order = rep.config.order as f64;
        for r in rep.rows.iter().filter(|r| s(&r[g]) == "roundoff") {
            ensure(f(&r[v]) <= operators::ROUNDOFF_TOL, format!("{}: {:e}", s(&r[nm]), f(&r[v])))?;
        }
        for r in rep.rows.iter().filter(|r| s(&r[g]) == "order") {
            let name = s(&r[nm]);
            if name.ends_with("(vanishes identically)") {
                ensure(f(&r[v]) < operators::EXACT_FLOOR, format!("{name}: {:e}", f(&r[v])))?;
                exact += 1;
                continue;
            }
            let nominal = if name.starts_with("green") { order + 1.0 } else { order };
            let p = f(&r[v]);
            worst = worst.max((p - nominal).abs() / nominal);
            ensure((p - nominal).abs() <= ORDER_SLACK * nominal, format!("{name} k={}: order {p:.3}, nominal {nominal}", r[2]))?;
            lines += 1;
        }
        for kind in ["d_exact - (dplus + L dminus)", "green dlam", "green dplus", "green dminus"] {
            ensure(rep.rows.iter().any(|r| s(&r[g]) == "order" && s(&r[nm]).starts_with(kind)), format!("no order rows for {kind}"))?;
        }
    }
    ensure(
        operator_reports()[1].rows.iter().any(|r| s(&r[1]).starts_with("dplus applied to sampled dplus alpha")),
        "no dplus-squared rows at n=2".into(),
    )?;
    Ok(format!("{lines} convergence rates within {:.0}% (worst {:.1}%), {exact} defects identically zero", ORDER_SLACK * 100.0, worst * 100.0))
}

fn c4_decomposition() -> Outcome {
    ensure(decompose::ORTHOGONALITY_TOL == DECOMPOSITION_TOL && decompose::RESIDUAL_TOL == DECOMPOSITION_TOL, "decomposition tolerances drifted".into())?;
    let mut parts = Vec::new();
    for (n, shape) in [(1usize, vec![33usize, 32]), (2, vec![9, 8, 8, 8])] {
        let mut c = cfg("decompose", n);
        c.shapes = vec![shape];
        c.samples = DECOMPOSITION_SAMPLES;
        let t = Instant::now();
        let rep = run(&c).map_err(|e| e.to_string())?;
        let el = t.elapsed();
        ensure(el < DECOMPOSITION_RUNTIME, format!("n={n} took {el:?}"))?;
        let (fl, o, r) = (col(&rep, "flavor"), col(&rep, "max_orthogonality"), col(&rep, "max_residual"));
        let flavors: std::collections::BTreeSet<(String, u64)> = rep.rows.iter().map(|x| (s(&x[fl]).to_string(), x[1].as_u64().unwrap())).collect();
        ensure(flavors.len() == 12, format!("n={n}: {} flavors", flavors.len()))?;
        for x in &rep.rows {
            ensure(f(&x[o]) <= DECOMPOSITION_TOL && f(&x[r]) <= DECOMPOSITION_TOL, format!("n={n} {} k={}: {:e} {:e}", s(&x[fl]), x[2], f(&x[o]), f(&x[r])))?;
        }
        parts.push(format!("n={n}: {} cases in {:.1}s", rep.rows.len(), el.as_secs_f64()));
    }
    Ok(parts.join(", "))
}

fn c5_finiteness() -> Outcome {
    let mut parts = Vec::new();
    for n in 1..=2 {
        let rep = suite("harmonic", n);
        let (kind, deg, bc, dim, expect) = (col(&rep, "kind"), col(&rep, "degree"), col(&rep, "bc"), col(&rep, "dimension"), col(&rep, "expect"));
        let mut groups: std::collections::BTreeMap<(String, u64, String), (String, Vec<u64>)> = Default::default();
        for r in &rep.rows {
            let e = groups.entry((s(&r[kind]).into(), r[deg].as_u64().unwrap(), s(&r[bc]).into())).or_insert((s(&r[expect]).into(), Vec::new()));
            e.1.push(r[dim].as_u64().unwrap());
        }
        let (mut stable, mut growing) = (0, 0);
        for ((k, d, b), (e, dims)) in &groups {
            ensure(dims.len() >= 2, format!("{k} k={d} {b}: one grid only"))?;
            if b != "none" {
                ensure(dims.windows(2).all(|w| w[0] == w[1]), format!("{k} k={d} {b}: {dims:?} not stable"))?;
                stable += 1;
            } else if e == "growing" {
                ensure(dims.windows(2).all(|w| w[0] < w[1]), format!("{k} k={d} none: {dims:?} not growing"))?;
                growing += 1;
            }
        }
        ensure(growing > 0, format!("n={n}: no growth cases"))?;
        parts.push(format!("n={n}: {stable} stable, {growing} growing"));
    }
    Ok(parts.join(", "))
}

fn c6_isomorphisms() -> Outcome {
    let mut failed = Vec::new();
    let mut total = 0;
    for n in 1..=2 {
        let rep = cohomology::run(&cfg("cohomology", n)).map_err(|e| e.to_string())?;
        let (g, nm, l, r, rel) = (col(&rep, "group"), col(&rep, "name"), col(&rep, "lhs"), col(&rep, "rhs"), col(&rep, "relation"));
        for row in rep.rows.iter().filter(|x| s(&x[g]) == "isomorphism") {
            total += 1;
            let (a, b) = (row[l].as_u64().unwrap(), row[r].as_u64().unwrap());
            let ok = match s(&row[rel]) {
                "=" => a == b,
                ">=" => a >= b,
                other => panic!("relation {other}"),
            };
            if !ok {
                failed.push(format!("n={n} k={} {}: {a} vs {b}", row[2], s(&row[nm])));
            }
        }
    }
    if failed.is_empty() {
        Ok(format!("{total} cases agree"))
    } else {
        Err(format!("{} of {total} cases disagree: {}", failed.len(), failed.join("; ")))
    }
}

/// Relative Betti numbers of ([0,1], ∂) × circle³ from the cellular cochain complex, by dense SVD.
fn cellular_relative_betti() -> Vec<usize> {
    let interval = {
        let mut d = DMatrix::zeros(3, 2);
        for i in 0..2 {
            d[(i, i)] = -1.0;
            d[(i + 1, i)] = 1.0;
        }
        (vec![2usize, 3], d)
    };
    let circle = {
        let mut d = DMatrix::zeros(3, 3);
        for i in 0..3 {
            d[(i, i)] = -1.0;
            d[(i, (i + 1) % 3)] = 1.0;
        }
        (vec![3usize, 3], d)
    };
    // complex as per-degree lists of (index tuple of factor degrees) with coboundaries assembled densely
    let factors = [interval, circle.clone(), circle.clone(), circle];
    let degs: Vec<Vec<usize>> = (0..16usize).map(|b| (0..4).map(|i| (b >> i) & 1).collect()).collect();
    let size = |t: &[usize]| t.iter().enumerate().map(|(i, &e)| factors[i].0[e]).product::<usize>();
    let cells = |k: usize| -> Vec<&Vec<usize>> { degs.iter().filter(|t| t.iter().sum::<usize>() == k).collect() };
    let dim = |k: usize| cells(k).iter().map(|t| size(t)).sum::<usize>();
    let block = |t: &[usize], i: usize| -> DMatrix<f64> {
        let mut m = DMatrix::from_element(1, 1, 1.0);
        for (j, &e) in t.iter().enumerate() {
            let fm = if j == i { factors[j].1.clone() } else { DMatrix::identity(factors[j].0[e], factors[j].0[e]) };
            m = m.kronecker(&fm);
        }
        m
    };
    let rank = |m: &DMatrix<f64>| -> usize {
        if m.is_empty() {
            return 0;
        }
        let sv = m.clone().svd(false, false).singular_values;
        let top = sv.max();
        sv.iter().filter(|&&x| x > 1e-9 * top).count()
    };
    let mut ranks = Vec::new();
    for k in 0..4 {
        let (src, dst) = (cells(k), cells(k + 1));
        let mut d = DMatrix::zeros(dim(k + 1), dim(k));
        let mut co = 0;
        for t in &src {
            for i in (0..4).filter(|&i| t[i] == 0) {
                let mut u = (*t).clone();
                u[i] = 1;
                let ro: usize = dst.iter().take_while(|x| ***x != u).map(|x| size(x)).sum();
                let sign = if t[..i].iter().sum::<usize>() % 2 == 0 { 1.0 } else { -1.0 };
                let b = block(t, i) * sign;
                d.view_mut((ro, co), b.shape()).copy_from(&b);
            }
            co += size(t);
        }
        ranks.push(rank(&d));
    }
    (0..=4).map(|k| dim(k) - if k < 4 { ranks[k] } else { 0 } - if k > 0 { ranks[k - 1] } else { 0 }).collect()
}

fn c7_lefschetz() -> Outcome {
    let betti = cellular_relative_betti();
    // k = 1: ker(L on H⁰) ≤ b₀ and coker(L: H⁻¹ → H¹) = H¹
    ensure(betti[0] == 0, format!("oracle b0 = {}", betti[0]))?;
    let oracle = betti[1];
    ensure(oracle == 1, format!("oracle gives {oracle}, expected 1"))?;
    let md = SymplecticModel::new(2).unwrap();
    let g = make_grid(2, &[5, 4, 4, 4], 2).unwrap();
    let l = lefschetz_rhs(1, &g, &md, PolyOptions::default()).map_err(|e| e.to_string())?;
    ensure(l.relative_betti == betti, format!("relative Betti {:?} vs oracle {betti:?}", l.relative_betti))?;
    ensure(l.rhs() == oracle, format!("right-hand side {} vs oracle {oracle}", l.rhs()))?;
    let lhs = cohomology_dim(Level::DPlus, Variant::RelativeD, 1, &g, &md).map_err(|e| e.to_string())?;
    ensure(lhs.dimension == oracle, format!("dim PH1(dplus, D+) = {} vs {oracle}", lhs.dimension))?;
    // the suite's own comparison on its default grid
    let rep = cohomology::run(&cfg("cohomology", 2)).map_err(|e| e.to_string())?;
    let row = rep.rows.iter().find(|r| s(&r[0]) == "lefschetz" && r[2] == 1).ok_or("no lefschetz row")?;
    ensure(row[4] == row[5] && row[5].as_u64() == Some(1), format!("suite row {row:?}"))?;
    Ok(format!("dim PH1(dplus, D+) = {} = rhs {} (oracle Betti {betti:?})", lhs.dimension, l.rhs()))
}

fn c8_poincare() -> Outcome {
    ensure(poincare::RESIDUAL_TOL == POINCARE_RESIDUAL && poincare::PAIRING_TOL == PAIRING_TOL, "Poincaré tolerances drifted".into())?;
    let mut ops = std::collections::BTreeSet::new();
    let (mut worst, mut pair) = (0.0f64, 0.0f64);
    for n in 1..=2 {
        let rep = suite("poincare", n);
        let (case, op, st, res, pr) = (col(&rep, "case"), col(&rep, "operator"), col(&rep, "status"), col(&rep, "equation_residual"), col(&rep, "pairing_ratio"));
        for r in &rep.rows {
            match s(&r[case]) {
                "manufactured" | "boundary data" => {
                    ensure(s(&r[st]) == "solved" && f(&r[res]) <= POINCARE_RESIDUAL, format!("n={n} {} k={}: {} {:e}", s(&r[op]), r[2], s(&r[st]), f(&r[res])))?;
                    worst = worst.max(f(&r[res]));
                    if s(&r[case]) == "manufactured" {
                        ops.insert(s(&r[op]).to_string());
                    }
                }
                "obstructed" => {
                    let d = (f(&r[pr]) - 1.0).abs();
                    pair = pair.max(d);
                    ensure(s(&r[st]) == "integrability_violated" && d <= PAIRING_TOL, format!("n={n} {} k={}: {} ratio {}", s(&r[op]), r[2], s(&r[st]), f(&r[pr])))?;
                }
                other => panic!("case {other}"),
            }
        }
    }
    ensure(ops.len() == 6, format!("manufactured operators {ops:?}"))?;
    Ok(format!("6 operators, max residual {worst:.1e}, max pairing deviation {pair:.1e}"))
}

fn c9_gaffney() -> Outcome {
    ensure(gaffney::REFINEMENT_TOL == GAFFNEY_REFINEMENT && gaffney::CONJUGATION_TOL == CONJUGATION_TOL, "Gaffney tolerances drifted".into())?;
    let (mut minc, mut change, mut conj, mut count) = (f64::INFINITY, 0.0f64, 0.0f64, 0);
    for n in 1..=2 {
        let rep = suite("gaffney", n);
        let (g, w, bc, v, ch) = (col(&rep, "group"), col(&rep, "which"), col(&rep, "bc"), col(&rep, "value"), col(&rep, "change"));
        for r in &rep.rows {
            if s(&r[g]) == "constant" {
                count += 1;
                minc = minc.min(f(&r[v]));
                ensure(f(&r[v]) > 0.0, format!("n={n} {} {} k={}: {}", s(&r[w]), s(&r[bc]), r[3], f(&r[v])))?;
                if !r[ch].is_null() {
                    change = change.max(f(&r[ch]));
                    ensure(f(&r[ch]) <= GAFFNEY_REFINEMENT, format!("n={n} {} {} k={}: change {}", s(&r[w]), s(&r[bc]), r[3], f(&r[ch])))?;
                }
            } else {
                conj = conj.max(f(&r[v]));
                ensure(f(&r[v]) <= CONJUGATION_TOL, format!("n={n} conjugation {:e}", f(&r[v])))?;
            }
        }
        for which in ["plus", "minus"] {
            for b in ["D", "JD"] {
                ensure(rep.rows.iter().any(|r| s(&r[w]) == which && s(&r[bc]) == b), format!("n={n}: no {which} {b} rows"))?;
            }
        }
    }
    Ok(format!("{count} constants, min {minc:.4}, max refinement change {:.1}%, conjugation {conj:.1e}", change * 100.0))
}

fn c10_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("symhodge-acceptance-{}", std::process::id()));
    let mut checked = Vec::new();
    for (exp, n) in [("identities", 2), ("harmonic", 1), ("poincare", 1), ("gaffney", 2), ("decompose", 1)] {
        let mut c = cfg(exp, n);
        c.out = dir.clone();
        c.samples = 3;
        c.seed = 12345;
        let mut bytes = Vec::new();
        for _ in 0..2 {
            let rep = run(&c).map_err(|e| e.to_string())?;
            let (_, js) = rep.write(&c.out).map_err(|e| e.to_string())?;
            bytes.push(std::fs::read(js).map_err(|e| e.to_string())?);
        }
        ensure(bytes[0] == bytes[1], format!("{exp} JSON differs between runs"))?;
        checked.push(exp);
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("byte-identical JSON for {}", checked.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("fiber identities", c1_identities),
        ("symbols", c2_symbols),
        ("operator consistency", c3_consistency),
        ("decomposition battery", c4_decomposition),
        ("finiteness and growth", c5_finiteness),
        ("isomorphism battery", c6_isomorphisms),
        ("Lefschetz cross-check", c7_lefschetz),
        ("Poincaré solvers", c8_poincare),
        ("Gaffney constants", c9_gaffney),
        ("determinism", c10_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("criterion {:>2}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || id.ends_with(&format!(" {f}"))) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failures += 1;
                println!("{id} FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failures > 0 {
        println!("acceptance: {failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
