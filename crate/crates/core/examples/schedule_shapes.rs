//! Prints local and global weights over a 40-step horizon for each schedule kind.

use uag::schedule::{schedule_weights, ScheduleKind, ScheduleParams};

fn main() -> uag::Result<()> {
    let logistic = ScheduleParams::logistic(0.3395, 1.3339, 5.0, 0.5479, 40);
    let kinds = [ScheduleKind::Logistic, ScheduleKind::Constant, ScheduleKind::Linear];
    println!("{:>4} {:>22} {:>22} {:>22}", "t", "logistic (wl, wg)", "constant (wl, wg)", "linear (wl, wg)");
    for t in [1, 2, 3, 5, 8, 12, 20, 30, 40] {
        print!("{t:>4}");
        for kind in kinds {
            let w = schedule_weights(t, &ScheduleParams { kind, ..logistic })?;
            print!(" {:>10.4} {:>10.4} ", w.w_local, w.w_global);
        }
        println!();
    }
    Ok(())
}
