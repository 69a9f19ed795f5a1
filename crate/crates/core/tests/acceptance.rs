//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Set `CREPANT_STRETCH=1` to also run the non-gating n = 5 construction.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crepant_core::geometry::PolarDual;
use crepant_core::pipeline::{Pipeline, PipelineArtifact, PipelineOptions};
use crepant_core::regularity::{verify_regularity_with, CheckMode, RegularityOptions, RegularityWitness};
use crepant_core::subdivision::{
    pull, pull_all, pull_literal, verify, verify_with, PairwiseCheck, PointStore, Subdivision, VerifyOptions,
};
use crepant_core::sylvester::{
    build, column_height, duality_map, lattice_points_p1, lattice_points_p2dual, w1, Family, FamilySpec, Limits,
};
use crepant_core::toric::{
    betti_sum, euler, fan_from_triangulation, hodge_diamond, index_formula, ResolutionFan,
};
use crepant_core::{BigInt, BigRat, CellPolytope, LatticePoint};

use common::{barycentric, box_scan, in_simplex, nvol, regularity_violation, sylvester};

type Outcome = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(start: Instant, budget: Duration, what: &str) -> Outcome {
    let t = start.elapsed();
    ensure!(t <= budget, "{what} took {t:?}, budget {budget:?}");
    Ok(())
}

fn spec(family: Family, n: usize) -> FamilySpec {
    FamilySpec::new(family, n).unwrap()
}

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

/// Artifacts for P2dual and P2 with n = 1..4 and P1 with n + 1 = 2..5.
struct Artifacts {
    p2dual: Vec<PipelineArtifact>,
    p2: Vec<PipelineArtifact>,
    p1: Vec<PipelineArtifact>,
    p2dual_time: Duration,
}

impl Artifacts {
    fn p2dual(&self, n: usize) -> &PipelineArtifact {
        &self.p2dual[n - 1]
    }
    fn p2(&self, n: usize) -> &PipelineArtifact {
        &self.p2[n - 1]
    }
    fn p1(&self, n_plus_1: usize) -> &PipelineArtifact {
        &self.p1[n_plus_1 - 2]
    }
}

fn build_artifacts() -> Result<Artifacts, String> {
    let cache = ok(tempfile::tempdir())?;
    let p = Pipeline::new(PipelineOptions {
        cache_dir: Some(cache.path().to_path_buf()),
        ..PipelineOptions::default()
    });
    let start = Instant::now();
    let p2dual = (1..=4).map(|n| p.triangulate_p2dual(n)).collect::<Result<Vec<_>, _>>();
    let p2dual_time = start.elapsed();
    Ok(Artifacts {
        p2dual: ok(p2dual)?,
        p2: ok((1..=4).map(|n| p.triangulate_p2(n)).collect::<Result<Vec<_>, _>>())?,
        p1: ok((2..=5).map(|n| p.triangulate_p1(n)).collect::<Result<Vec<_>, _>>())?,
        p2dual_time,
    })
}

fn c1_volumes() -> Outcome {
    let start = Instant::now();
    let s = sylvester(6);
    for n in 1..=5 {
        let p2 = ok(build(spec(Family::P2, n)))?;
        let v2 = nvol(p2.vertices());
        ensure!(v2 == big(s[n] - 1), "nvol(P2_{n}) = {v2}, expected {}", s[n] - 1);
        ensure!(ok(p2.nvol())? == v2, "library nvol of P2_{n} differs from the oracle");
        let p1 = ok(build(spec(Family::P1, n + 1)))?;
        let v1 = nvol(p1.vertices());
        ensure!(v1 == 2 * &v2, "nvol(P1_{}) = {v1}, expected {}", n + 1, 2 * &v2);
        ensure!(ok(p1.nvol())? == v1, "library nvol of P1_{} differs from the oracle", n + 1);
    }
    within(start, Duration::from_secs(1), "volume identities")
}

fn c2_self_duality() -> Outcome {
    let start = Instant::now();
    for n in 1..=5 {
        let t = ok(duality_map(n))?;
        let rows: Vec<Vec<BigInt>> = t.matrix.iter().map(|r| r.iter().map(|&x| big(x)).collect()).collect();
        ensure!(common::leibniz(&rows) == big(1), "det T_{n} differs from 1");
        let p2 = ok(build(spec(Family::P2, n)))?;
        let image: BTreeSet<LatticePoint> = p2.vertices().iter().map(|v| t.apply(v).unwrap()).collect();
        // Polar vertices u: <u, v> + 1 >= 0 on every vertex v, equality on n of them.
        for u in &image {
            let vals: Vec<i128> = p2
                .vertices()
                .iter()
                .map(|v| u.coords().iter().zip(v.coords()).map(|(&a, &b)| a as i128 * b as i128).sum::<i128>() + 1)
                .collect();
            ensure!(vals.iter().all(|&x| x >= 0), "T(v) = {u} is not in the polar of P2_{n}");
            ensure!(vals.iter().filter(|&&x| x == 0).count() == n, "T(v) = {u} is not a polar vertex");
        }
        let dual: BTreeSet<LatticePoint> = match ok(p2.polar_dual())? {
            PolarDual::Lattice(s) => s.vertices().iter().cloned().collect(),
            PolarDual::Rational(_) => return Err(format!("polar dual of P2_{n} is not a lattice simplex")),
        };
        ensure!(image == dual, "T maps the vertices of P2_{n} elsewhere than the polar vertices");
    }
    within(start, Duration::from_secs(1), "self-duality")
}

fn lemma_column_top(s: &[i64], y: &[i64]) -> i64 {
    let n = y.len();
    if y.iter().all(|&c| c == -1) {
        return s[n] - 1;
    }
    -y.iter().enumerate().map(|(i, &c)| (s[n] - 1) / s[i] * c).sum::<i64>()
}

fn c3_lattice_points() -> Outcome {
    let start = Instant::now();
    let limits = Limits::default();
    let s = sylvester(4);
    for n in 1..=3 {
        let got = ok(lattice_points_p2dual(n, &limits))?;
        let want = box_scan(ok(build(spec(Family::P2dual, n)))?.vertices());
        ensure!(got == want, "P2dual_{n}: {} points enumerated, box scan finds {}", got.len(), want.len());
    }
    for n_plus_1 in 2..=4 {
        let n = n_plus_1 - 1;
        let upper = ok(build(spec(Family::P2dual, n_plus_1)))?;
        for y in ok(lattice_points_p2dual(n, &limits))? {
            let mut top = -1;
            while in_simplex(upper.vertices(), y.lift(top + 1).coords()) {
                top += 1;
            }
            ensure!(in_simplex(upper.vertices(), y.lift(top).coords()), "column over {y} is empty");
            let lemma = lemma_column_top(&s, y.coords());
            ensure!(top == lemma, "column top over {y} at level {n_plus_1}: scan {top}, formula {lemma}");
            ensure!(ok(column_height(n_plus_1, &y))? == top, "column_height({n_plus_1}, {y}) wrong");
            if y.coords().iter().all(|&c| c == -1) {
                ensure!(top == s[n] - 1, "special column top {top} differs from s_n - 1");
            }
        }
    }
    within(start, Duration::from_secs(30), "lattice-point checks")
}

fn cell_points(t: &Subdivision, i: usize) -> Vec<LatticePoint> {
    t.cell(i).iter().map(|&v| t.store().get(v).clone()).collect()
}

fn c4_triangulations(a: &Artifacts) -> Outcome {
    for (n, cells) in [(1, 2), (2, 6), (3, 42), (4, 1806)] {
        let t = &a.p2dual(n).triangulation;
        ensure!(t.num_cells() == cells, "P2dual_{n}: {} cells, expected {cells}", t.num_cells());
        for i in 0..t.num_cells() {
            let v = nvol(&cell_points(t, i));
            ensure!(v == big(1), "P2dual_{n}: cell {i} has nvol {v}");
        }
        let r = ok(verify(t))?;
        ensure!(r.valid && r.unimodular, "P2dual_{n}: {:?}", r.reasons);
        ensure!(r.volume_checksum == big(cells as i64), "P2dual_{n}: checksum {}", r.volume_checksum);
        ensure!(r.ambient_nvol == nvol(t.ambient()), "P2dual_{n}: polytope volume mismatch");
        if n <= 3 {
            let all_pairs = VerifyOptions { pairwise: PairwiseCheck::Always };
            let r = ok(verify_with(t, &all_pairs))?;
            ensure!(r.valid && r.pairwise_checked, "P2dual_{n}: pairwise check {:?}", r.reasons);
        }
    }
    ensure!(a.p2dual_time <= Duration::from_secs(60), "n <= 4 took {:?}", a.p2dual_time);
    Ok(())
}

fn interior_shared_point(t: &Subdivision) -> Option<u32> {
    (0..t.store().len() as u32).find(|&i| {
        let p = t.store().get(i);
        barycentric(t.ambient(), p.coords()).iter().all(|l| l.is_positive())
            && t.cells().filter(|c| c.contains(&i)).count() >= 2
    })
}

fn c5_regularity(a: &Artifacts) -> Outcome {
    let start = Instant::now();
    let full = RegularityOptions {
        mode: CheckMode::Full,
        ..RegularityOptions::default()
    };
    let all = (1..=4)
        .map(|n| a.p2dual(n))
        .chain((1..=4).map(|n| a.p2(n)))
        .chain((2..=5).map(|n| a.p1(n)));
    for art in all {
        let cert = ok(verify_regularity_with(&art.triangulation, &art.witness, &full))?;
        ensure!(cert.regular, "{}: witness rejected at {:?}", art.spec, cert.violating_pairs.first());
        ensure!(cert.mode == CheckMode::Full, "{}: not checked in full mode", art.spec);
        if art.triangulation.num_cells() <= 100 {
            let t = &art.triangulation;
            let cells: Vec<Vec<u32>> = t.cells().map(<[u32]>::to_vec).collect();
            let bad = regularity_violation(t.store().points(), &cells, art.witness.values());
            ensure!(bad.is_none(), "{}: oracle finds a violation at {bad:?}", art.spec);
        }
    }
    for art in [a.p2dual(3), a.p2(3), a.p1(4)] {
        let t = &art.triangulation;
        let p = interior_shared_point(t).ok_or(format!("{}: no interior shared point", art.spec))?;
        let mut values = art.witness.values().to_vec();
        values[p as usize] += BigRat::from_integer(big(1_000_000));
        let perturbed = RegularityWitness::new(values);
        let cert = ok(verify_regularity_with(t, &perturbed, &full))?;
        ensure!(!cert.regular, "{}: perturbed witness accepted", art.spec);
        let cells: Vec<Vec<u32>> = t.cells().map(<[u32]>::to_vec).collect();
        ensure!(
            regularity_violation(t.store().points(), &cells, perturbed.values()).is_some(),
            "{}: oracle accepts the perturbed witness",
            art.spec
        );
    }
    within(start, Duration::from_secs(600), "regularity checks")
}

fn c6_extension(a: &Artifacts) -> Outcome {
    for n in 1..=3 {
        let upper = &a.p2dual(n + 1).triangulation;
        let mut bottom = BTreeSet::new();
        for i in 0..upper.num_cells() {
            let low: Vec<LatticePoint> = cell_points(upper, i)
                .into_iter()
                .filter(|p| *p.coords().last().unwrap() == -1)
                .collect();
            if low.len() == n + 1 {
                let mut face: Vec<LatticePoint> = low.iter().map(LatticePoint::project).collect();
                face.sort();
                bottom.insert(face);
            }
        }
        let lower = &a.p2dual(n).triangulation;
        let want: BTreeSet<Vec<LatticePoint>> = (0..lower.num_cells())
            .map(|i| {
                let mut c = cell_points(lower, i);
                c.sort();
                c
            })
            .collect();
        ensure!(bottom == want, "bottom face of P2dual_{} does not restrict to P2dual_{n}", n + 1);
    }
    Ok(())
}

fn c7_p1(a: &Artifacts) -> Outcome {
    let limits = Limits::default();
    let s = sylvester(5);
    for n in 1..=4 {
        let art = a.p1(n + 1);
        let t = &art.triangulation;
        let cells = 2 * (s[n] - 1);
        ensure!(t.num_cells() as i64 == cells, "P1_{}: {} cells, expected {cells}", n + 1, t.num_cells());
        let pts = ok(lattice_points_p1(n + 1, &limits))?;
        ensure!(t.store().points() == pts.as_slice(), "P1_{}: point set differs", n + 1);
        ensure!(t.used_points().len() == pts.len(), "P1_{}: some lattice points unused", n + 1);
        if n < 3 {
            let scan = box_scan(ok(build(spec(Family::P1, n + 1)))?.vertices());
            ensure!(pts == scan, "P1_{}: point set differs from the box scan", n + 1);
        }
        let apexes = [LatticePoint::unit(n + 1, n), ok(w1(n + 1))?];
        let idx: Vec<u32> = apexes.iter().map(|p| t.store().index_of(p).unwrap()).collect();
        for (i, c) in t.cells().enumerate() {
            let k = idx.iter().filter(|a| c.contains(a)).count();
            ensure!(k == 1, "P1_{}: cell {i} contains {k} apexes", n + 1);
        }
    }
    Ok(())
}

fn check_fan(name: &str, t: &Subdivision, fan: &ResolutionFan) -> Outcome {
    let f = fan.flags;
    ensure!(f.complete && f.smooth && f.crepant && f.primitive, "{name}: flags {f:?}");
    let d = t.ambient_dim();
    let origin = LatticePoint::origin(d);
    let mut total = BigInt::zero();
    for cone in &fan.cones {
        let mut simplex = vec![origin.clone()];
        simplex.extend(cone.iter().map(|&r| fan.rays[r as usize].clone()));
        let v = nvol(&simplex);
        ensure!(v == big(1), "{name}: cone {cone:?} has multiplicity {v}");
        total += v;
    }
    ensure!(total == nvol(t.ambient()), "{name}: cones cover volume {total}");
    for r in &fan.rays {
        let lam = barycentric(t.ambient(), r.coords());
        ensure!(lam.iter().all(|l| !l.is_negative()), "{name}: ray {r} outside the polytope");
        ensure!(lam.iter().any(Zero::is_zero), "{name}: ray {r} is interior");
    }
    Ok(())
}

fn c8_fans(a: &Artifacts) -> Outcome {
    let mut jobs: Vec<&PipelineArtifact> = (2..=4).map(|n| a.p2(n)).collect();
    jobs.extend((3..=4).map(|n| a.p1(n)));
    for art in jobs {
        let t = &art.triangulation;
        let fan = ok(fan_from_triangulation(t))?;
        check_fan(&art.spec.to_string(), t, &fan)?;
    }
    let cones = |art: &PipelineArtifact| fan_from_triangulation(&art.triangulation).map(|f| f.cones.len());
    ensure!(ok(cones(a.p2(2)))? == 6, "P2_2 fan should have 6 cones");
    ensure!(ok(cones(a.p1(3)))? == 12, "P1_3 fan should have 12 cones");
    Ok(())
}

fn c9_invariants() -> Outcome {
    let index = [
        "1",
        "6",
        "66",
        "3486",
        "6521466",
        "21300104111286",
        "226847426110811738551148466",
    ];
    for (n, want) in (1..=7).zip(index) {
        ensure!(ok(index_formula(n))?.to_string() == want, "index({n}) differs from {want}");
    }
    let table = [
        ("4", "0"),
        ("24", "24"),
        ("1008", "-960"),
        ("1820448", "1820448"),
        ("5940926462016", "-5940922821120"),
        ("63271205161020798539584896", "63271205161020798539584896"),
    ];
    for (n, (b, e)) in (1..=6).zip(table) {
        ensure!(ok(betti_sum(n))?.to_string() == b, "betti_sum({n}) differs from {b}");
        ensure!(ok(euler(n, 1))?.to_string() == e, "euler({n}) differs from {e}");
    }
    for n in [3, 4] {
        for i in [1, 2] {
            let h = ok(hodge_diamond(n, i))?;
            let mut sum = BigInt::zero();
            let mut alt = BigInt::zero();
            for (p, row) in h.h.iter().enumerate() {
                for (q, &x) in row.iter().enumerate() {
                    sum += x;
                    if (p + q) % 2 == 0 {
                        alt += x;
                    } else {
                        alt -= x;
                    }
                }
            }
            ensure!(sum == ok(betti_sum(n))?, "diamond ({n},{i}) sums to {sum}");
            ensure!(alt == ok(euler(n, i))?, "diamond ({n},{i}) has euler {alt}");
        }
    }
    let h = |n, i, p: usize, q: usize| hodge_diamond(n, i).map(|d| d.h[p][q]);
    ensure!(ok(h(3, 1, 1, 1))? == 11 && ok(h(3, 1, 2, 1))? == 491, "diamond (3,1) entries");
    ensure!(ok(h(4, 2, 1, 1))? == 151700 && ok(h(4, 2, 2, 2))? == 1213644, "diamond (4,2) entries");
    ensure!(ok(h(4, 1, 2, 2))? == 1213644 && ok(h(4, 1, 3, 1))? == 303148, "diamond (4,1) entries");
    Ok(())
}

fn random_polytope(rng: &mut ChaCha8Rng) -> Option<Subdivision> {
    let d = rng.random_range(1..=3usize);
    let k = rng.random_range(d + 1..=8usize);
    let pts: Vec<LatticePoint> = (0..k)
        .map(|_| LatticePoint::new((0..d).map(|_| rng.random_range(-2..=2)).collect()))
        .collect();
    let cp = CellPolytope::from_points(&pts).ok()?;
    if cp.dim() != d {
        return None;
    }
    let store = PointStore::new(cp.lattice_points_bruteforce().ok()?).ok()?;
    Subdivision::trivial(store, cp.vertices()).ok()
}

fn c10_pulling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut tested = 0;
    while tested < 120 {
        let Some(s0) = random_polytope(&mut rng) else { continue };
        tested += 1;
        let mut order: Vec<u32> = (0..s0.store().len() as u32).collect();
        order.shuffle(&mut rng);
        let mut s = s0.clone();
        for &m in order.iter().take(4) {
            let fast = ok(pull(&s, m))?;
            let slow = ok(pull_literal(&s, m))?;
            ensure!(fast == slow, "pull and literal pull disagree at point {m} of {:?}", s0.ambient());
            s = fast;
        }
        let t = ok(pull_all(&s0))?;
        let r = ok(verify(&t))?;
        ensure!(r.valid, "pull_all of {:?} is invalid: {:?}", s0.ambient(), r.reasons);
        ensure!(r.volume_checksum == r.ambient_nvol, "pull_all of {:?} loses volume", s0.ambient());
        let cell_sum: BigInt = (0..t.num_cells()).map(|i| nvol(&cell_points(&t, i))).sum();
        ensure!(cell_sum == r.volume_checksum, "oracle cell volumes disagree for {:?}", s0.ambient());
    }
    Ok(())
}

fn stretch_n5() -> Outcome {
    let start = Instant::now();
    let a = ok(Pipeline::new(PipelineOptions::default()).triangulate_p2dual(5))?;
    ensure!(a.triangulation.num_cells() == 3_263_442, "{} cells", a.triangulation.num_cells());
    ensure!(a.regularity_mode == Some(CheckMode::LocalSampled), "n = 5 witness not checked");
    within(start, Duration::from_secs(900), "n = 5")
}

fn report(label: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(()) => {
            println!("PASS {label} ({secs:.2}s)");
            true
        }
        Err(e) => {
            println!("FAIL {label} ({secs:.2}s): {e}");
            false
        }
    }
}

#[test]
fn acceptance() {
    let mut passed = Vec::new();
    passed.push(report("1 volume identities", c1_volumes));
    passed.push(report("2 self-duality", c2_self_duality));
    passed.push(report("3 lattice-point structure", c3_lattice_points));
    let arts = build_artifacts();
    let with = |f: fn(&Artifacts) -> Outcome| {
        let arts = &arts;
        move || arts.as_ref().map_err(Clone::clone).and_then(f)
    };
    passed.push(report("4 triangulation construction", with(c4_triangulations)));
    passed.push(report("5 regularity certificates", with(c5_regularity)));
    passed.push(report("6 extension property", with(c6_extension)));
    passed.push(report("7 P1 artifacts", with(c7_p1)));
    passed.push(report("8 fan flags", with(c8_fans)));
    passed.push(report("9 invariant tables", c9_invariants));
    passed.push(report("10 pulling oracle equivalence", c10_pulling));
    if std::env::var_os("CREPANT_STRETCH").is_some() {
        report("stretch n = 5 (non-gating)", stretch_n5);
    } else {
        println!("SKIP stretch n = 5 (non-gating; set CREPANT_STRETCH=1)");
    }
    let failed: Vec<usize> = passed.iter().enumerate().filter(|(_, &p)| !p).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
