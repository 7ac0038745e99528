use driftbench_core::expert::{ExpertController, ExpertParams};
use driftbench_core::procgen::{generate, GenParams};
use driftbench_core::render::CameraModel;
use driftbench_core::sim::{run_episode, DroneState, EnvKind, EpisodeConfig, Termination};

fn main() {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let params = GenParams::default();
    let cam = CameraModel::default();
    let cfg = EpisodeConfig::default();
    for kind in EnvKind::TRAINING {
        let t0 = std::time::Instant::now();
        let mut success = 0;
        let mut collide = 0;
        let mut timeout = 0;
        let mut dist_sum = 0.0;
        let mut fails = Vec::new();
        for seed in 0..n {
            let world = generate(kind, seed, &params).unwrap();
            let mut ctrl = ExpertController::new(ExpertParams::default());
            let res = run_episode(&world, &cam, &DroneState::default(), &mut ctrl, &cfg, None).unwrap();
            dist_sum += res.distance_traveled;
            match res.termination {
                Termination::Success => success += 1,
                Termination::Collision => { collide += 1; fails.push((seed, "C", res.distance_traveled)); }
                Termination::Timeout => { timeout += 1; fails.push((seed, "T", res.distance_traveled)); }
            }
        }
        println!(
            "{kind:8} success {success}/{n}  collide {collide} timeout {timeout}  avg_dist {:.2}  [{:.1}s]",
            dist_sum / n as f64, t0.elapsed().as_secs_f64()
        );
        for f in fails.iter().take(8) { println!("   fail seed {} {} at {:.1} m", f.0, f.1, f.2); }
    }
}
