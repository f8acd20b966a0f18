//! Minimal DIMACS front end over CaDiCaL speaking SAT-competition output.
//!
//! Usage: `bookembed-sat FILE.cnf`. Exit code 10 for SAT, 20 for UNSAT,
//! 0 for UNKNOWN and 1 on input errors.

use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [path] = &args[..] else {
        eprintln!("usage: bookembed-sat FILE.cnf");
        return ExitCode::from(1);
    };
    let mut solver: cadical::Solver = cadical::Solver::new();
    let declared = match solver.read_dimacs(Path::new(path)) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("bookembed-sat: {path}: {e:?}");
            return ExitCode::from(1);
        }
    };
    let out = io::stdout();
    let mut out = BufWriter::new(out.lock());
    let status = solver.solve();
    let code = match status {
        Some(true) => {
            let vars = declared.max(solver.max_variable());
            let _ = writeln!(out, "s SATISFIABLE");
            let mut line = String::from("v");
            for v in 1..=vars {
                let lit = if solver.value(v) == Some(true) { v } else { -v };
                line.push_str(&format!(" {lit}"));
                if line.len() > 72 {
                    let _ = writeln!(out, "{line}");
                    line = String::from("v");
                }
            }
            let _ = writeln!(out, "{line} 0");
            10
        }
        Some(false) => {
            let _ = writeln!(out, "s UNSATISFIABLE");
            20
        }
        None => {
            let _ = writeln!(out, "s UNKNOWN");
            0
        }
    };
    let _ = out.flush();
    ExitCode::from(code)
}
