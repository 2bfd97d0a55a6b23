//! Random sweep over the schedule weights and the resulting Pareto front.

use uag::process::{LanguageModel, ToyArModel};
use uag::sweep::{pareto_front, run_sweep, select_best, ParamRange, Sampling, SweepSpace, DEFAULT_MAX_DEGEN};
use uag::GenerationConfig;

fn main() -> uag::Result<()> {
    let model = ToyArModel::seeded(64, 32, 2)?;
    let prompts: Vec<Vec<usize>> = ["t1 t2", "t5 t9 t3"].iter().map(|p| model.tokenizer().encode(p)).collect();
    let base = GenerationConfig::language_model(20, 6, 0);
    let space = SweepSpace {
        alpha: Some(ParamRange::Interval { min: 0.0, max: 2.0 }),
        beta: Some(ParamRange::Interval { min: 0.0, max: 3.0 }),
        l0: None,
        delta: None,
        temperature: Some(ParamRange::Grid { grid: vec![0.8, 1.0] }),
        sampling: Sampling::Random,
        budget: 12,
    };
    let points = run_sweep(&space, &base, &model, &prompts, 9)?;
    let front = pareto_front(&points);
    println!("{:>3} {:>7} {:>7} {:>5} {:>9} {:>7} front", "id", "alpha", "beta", "temp", "diversity", "degen");
    for p in &points {
        let on_front = front.indices.contains(&(p.run_id as usize));
        println!(
            "{:>3} {:>7.3} {:>7.3} {:>5.2} {:>9.4} {:>7.4} {}",
            p.run_id, p.params.alpha, p.params.beta, p.params.temperature, p.diversity, p.degeneration,
            if on_front { "*" } else { "" }
        );
    }
    match select_best(&front.points, DEFAULT_MAX_DEGEN) {
        Ok(best) => println!("best: run {} (diversity {:.4})", best.run_id, best.diversity),
        Err(e) => println!("no admissible point: {e}"),
    }
    Ok(())
}
