//! Writes a generated pair to text and CSV files, reads it back, and prints
//! the JSON report of the `tau` subcommand run on the files.

use shorted_ops::cli::{main_with_args, read_matrix, write_matrix, MatrixFormat};
use shorted_ops::verify::{gen_pair, EnsembleSpec};
use shorted_ops::TolerancePolicy;

fn main() -> shorted_ops::Result<()> {
    let pol = TolerancePolicy::default();
    let dir = std::env::temp_dir().join("shorted-ops-matrix-files");
    std::fs::create_dir_all(&dir).expect("temp dir is writable");

    let (g, x) = gen_pair(&EnsembleSpec::new(4, 2, 3, 1, 8))?;
    for fmt in [MatrixFormat::Txt, MatrixFormat::Csv] {
        let path = dir.join(format!("G.{}", fmt.extension()));
        write_matrix(&path, g.entries(), fmt)?;
        let (back, _) = read_matrix(&path, fmt, &pol)?;
        println!("{}: round trip exact = {}", path.display(), back.entries() == g.entries());
    }
    write_matrix(&dir.join("X.txt"), x.entries(), MatrixFormat::Txt)?;
    println!("{}", std::fs::read_to_string(dir.join("G.txt")).expect("just written"));

    let g_path = dir.join("G.txt").display().to_string();
    let x_path = dir.join("X.txt").display().to_string();
    let code = main_with_args(["shorted-ops", "tau", &g_path, &x_path]);
    println!("exit code {code}");
    Ok(())
}
