use plate_fem::assembly::Triple;
use plate_fem::multilevel::Domain;
use plate_fem::study::{run_study, Method, StudyConfig};

fn show(name: &str, domain: Domain, triple: Triple, method: Method, n0: usize, levels: usize) {
    let config = StudyConfig { domain, triple, method, levels, num_eigs: 6, n0, seed: 0 };
    let r = run_study(&config).unwrap();
    println!("=== {name} seconds {:?}", r.seconds.iter().map(|s| (s*100.0).round()/100.0).collect::<Vec<_>>());
    let nl = levels;
    for j in 0..6 {
        let ord_l = r.ord_lambda[nl - 1][j].map(|o| format!("{o:.3}")).unwrap_or("-".into());
        let ord_u = r.ord_u[nl - 1][j].map(|o| format!("{o:.3}")).unwrap_or("-".into());
        let below: Vec<String> = (1..nl).map(|l| {
            let d = r.lambdas[nl][j] - r.lambdas[l][j];
            format!("{}{:.1e}", if d >= 0.0 {"+"} else {"-"}, d.abs())
        }).collect();
        println!("λ{} trend {} ord_l {} ord_u {} ref-λ per level {:?}", j+1, r.trends[j], ord_l, ord_u, below);
    }
}

fn main() {
    show("square/A/single n0=4 L5", Domain::Square, Triple::A, Method::Single, 4, 5);
    show("lshape/A/single n0=4 L5", Domain::LShape, Triple::A, Method::Single, 4, 5);
    show("square/B/single n0=8 L4", Domain::Square, Triple::B, Method::Single, 8, 4);
    show("square/B/multi n0=8 L4", Domain::Square, Triple::B, Method::Multi, 8, 4);
}
