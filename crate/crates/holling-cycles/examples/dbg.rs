use holling_cycles::cycles::*;
use holling_cycles::equilibria::find_finite;
use holling_cycles::flow::*;
use holling_cycles::vectorfield::SystemParams;

fn survey(alpha: f64, beta: f64, delta: f64, lambda: f64, mu: f64) {
    let Ok(p) = SystemParams::new(alpha, beta, delta, lambda, mu) else { return };
    let list = find_finite(&p);
    let interior: Vec<_> = list.iter().filter(|e| e.in_open_first_quadrant).collect();
    print!("a={alpha:.4} b={beta:.3}: pts[");
    for e in &interior {
        print!("({:.2},{:.2}){}", e.location.x, e.location.y,
            if e.is_anti_saddle() { if e.eigenvalues[0].re + e.eigenvalues[1].re > 0.0 {"U"} else {"s"} } else {"X"});
    }
    print!("]");
    let Some(a) = interior.iter().find(|e| e.is_anti_saddle()) else { println!(" no A"); return };
    let sec = Section::new(a.location, (1.0, 1.0)).unwrap();
    let opts = CycleScanOptions {
        max_period: 800.0,
        bbox: BoundingBox::new(-1e-9, 400.0, -1e-9, 400.0),
        ..Default::default()
    };
    let cycles = locate_cycles(&p, &sec, (0.005, 80.0), 100, &opts);
    for c in &cycles {
        let xmax = c.orbit_samples.iter().map(|q| q.x).fold(0.0, f64::max);
        let ymax = c.orbit_samples.iter().map(|q| q.y).fold(0.0, f64::max);
        let enc: Vec<bool> = interior.iter().map(|e| c.encloses(e.location)).collect();
        print!(" [s*={:.3} {} T={:.0} reach=({:.1},{:.1}) enc={:?}]",
            c.s_star, c.stability.as_str(), c.period, xmax, ymax, enc);
    }
    println!();
}

fn main() {
    let (delta, lambda, mu) = (0.4, 0.2, 0.0);
    // coarse alpha sweep at a few betas
    for beta in [-0.7, -1.0, -1.4] {
        for alpha in [2.0, 2.3, 2.6, 2.9, 3.2] {
            survey(alpha, beta, delta, lambda, mu);
        }
        println!("---");
    }
}
