//! Eigenvalues, conductance and phase thresholds of a few graphs.
use kvote::graph::{gen_complete, gen_cycle, gen_hypercube, gen_random_regular, petersen, SimpleMode};
use kvote::spectral::{conductance_exact, friedman_lambda, phase_params, second_eigenvalue, GraphKind, DEFAULT_MAX_ITER, DEFAULT_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graphs = [
        ("K8", gen_complete(8)?),
        ("C9", gen_cycle(9)?),
        ("Q4", gen_hypercube(4)?),
        ("Petersen", petersen()),
        ("random 3-regular, n=16", gen_random_regular(16, 3, 1, SimpleMode::RejectSimple)?),
    ];
    for (name, g) in &graphs {
        let r = second_eigenvalue(g, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let phi = conductance_exact(g)?;
        println!(
            "{name:>24}: lambda2={:+.6} lambdaN={:+.6} lambdaG={:.6} conductance={phi:.4} (>= 1 - lambdaG = {:.4})",
            r.lambda2,
            r.lambda_n,
            r.lambda_g,
            1.0 - r.lambda_g
        );
    }

    let g = gen_random_regular(4096, 16, 3, SimpleMode::Repair)?;
    let r = second_eigenvalue(&g, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    println!("random 16-regular n=4096: lambdaG={:.4}, 2sqrt(d-1)/d={:.4}", r.lambda_g, friedman_lambda(16));
    let p = phase_params(g.n(), g.d(), GraphKind::RandomRegular, None, None)?;
    println!("phase thresholds: c={:.4} omega={} alpha={:.4} gamma={:.4}", p.c, p.omega, p.alpha, p.gamma);
    Ok(())
}
