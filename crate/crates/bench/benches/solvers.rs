use criterion::{criterion_group, criterion_main, Criterion};
use dopf::qp::DEFAULT_TOL;
use dopf::{build_dc_opf, solve_centralized, QpSolver};
use dopf_bench::case;

fn centralized(c: &mut Criterion) {
    for name in ["case14", "case118", "case300"] {
        let net = case(name);
        c.bench_function(&format!("centralized/{name}"), |b| b.iter(|| solve_centralized(&net).unwrap()));
    }
}

fn warm_qp(c: &mut Criterion) {
    let net = case("case118");
    let qp = build_dc_opf(&net).unwrap();
    let mut solver = QpSolver::new();
    let first = solver.solve(&qp, DEFAULT_TOL, None).unwrap();
    c.bench_function("qp/case118_warm", |b| b.iter(|| solver.solve(&qp, DEFAULT_TOL, Some(&first)).unwrap()));
}

criterion_group!(benches, centralized, warm_qp);
criterion_main!(benches);
