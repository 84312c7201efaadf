//! Drive the command-line front end in-process: solve, reuse the written
//! file as a guess, and resample it on a dense grid.

use std::fs;

use limcycle::cli::{run, SolutionFile};

fn main() -> limcycle::Result<()> {
    let dir = std::env::temp_dir().join("limcycle-example");
    fs::create_dir_all(&dir)?;
    let sol = dir.join("pendulum_p2.csv");
    let sol = sol.to_str().unwrap();
    let common = ["--model", "pendulum", "--param", "b=181", "--subharmonic", "2"];
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());

    let mut args = vec!["limcycle", "solve", "--guess", "sin:1.0", "--out", sol];
    args.extend_from_slice(&common);
    println!("solve exit code {}", run(args, &mut out, &mut err));

    let guess = format!("file:{sol}");
    let mut args = vec!["limcycle", "solve", "--guess", &guess, "--out", sol];
    args.extend_from_slice(&common);
    println!("re-solve exit code {}", run(args, &mut out, &mut err));
    let file = SolutionFile::load(sol.as_ref())?;
    println!("iterations on reload: {}", file.meta["iterations"]);

    let dense = dir.join("dense.csv");
    let args = ["limcycle", "interp", "--solution", sol, "--points", "400", "--out", dense.to_str().unwrap()];
    println!("interp exit code {}", run(args, &mut out, &mut err));
    println!("dense rows: {}", SolutionFile::load(&dense)?.rows.len());
    Ok(())
}
