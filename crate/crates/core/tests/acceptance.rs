use std::process::ExitCode;

use adia_core::acceptance::run_all;
use adia_core::Execution;

fn main() -> ExitCode {
    let reports = run_all(Execution::default());
    for r in &reports {
        println!("{}", r.line());
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed", reports.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
