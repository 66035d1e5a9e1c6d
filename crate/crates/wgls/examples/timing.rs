use std::time::Instant;
use wgls::study::{run_study, MeshFamily, StudyConfig};

fn main() {
    let runs = [
        ("tri k=2", MeshFamily::Triangular, 2u32, 2u32, 5u32, 1.0),
        ("tri k=3", MeshFamily::Triangular, 3, 2, 5, 1.0),
        ("poly k=1", MeshFamily::NonconvexPolygonal, 1, 3, 6, 1.0),
        ("poly k=2", MeshFamily::NonconvexPolygonal, 2, 2, 5, 1.0),
        ("tri k=1 lam=100", MeshFamily::Triangular, 1, 5, 7, 100.0),
    ];
    for (name, family, k, lo, hi, lambda) in runs {
        let config = StudyConfig {
            family,
            degree: k,
            levels: (lo, hi),
            lambda,
            ..StudyConfig::default()
        };
        let t0 = Instant::now();
        let report = run_study(&config).unwrap();
        println!("{name}: {:?} failure={:?}", t0.elapsed(), report.failure);
        for l in &report.levels {
            println!(
                "  level {} h={:.4} free={} l2={:.3e} ({:.2?}) wg={:.3e} ({:.2?}) en={:.3e} ({:.2?}) it={}",
                l.level, l.h, l.n_free_dofs,
                l.errors.l2_interior, l.ord_l2, l.errors.weak_grad, l.ord_wgrad,
                l.errors.energy, l.ord_energy, l.solver.iterations
            );
        }
    }
}
