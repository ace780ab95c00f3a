//! Regenerates the bundled data files.
//!
//! `cargo run --release -p edgeroles --example gen_data -- [dir]`

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use edgeroles::gen;
use edgeroles::Graph;

fn write_graph(path: &Path, header: &str, g: &Graph) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {header}")?;
    g.write_edgelist(&mut w)?;
    w.flush()
}

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| PathBuf::from("data"), PathBuf::from);
    fs::create_dir_all(&dir)?;

    let collab = gen::collaboration(380, 300, 1);
    write_graph(&dir.join("collab.edges"), "co-authorship style graph: 380 authors, 300 projects, seed 1", &collab)?;

    let spec = gen::TwoRegime::default();
    let stream = gen::two_regime_stream(&spec, 0);
    write_graph(
        &dir.join("two_regime.edges"),
        "src dst weight time; star forest for t < 60, random graphs after; width 10, seed 0",
        &stream,
    )?;

    let periodic = gen::periodic_stream(80, 10, 12, 3);
    write_graph(&dir.join("periodic.edges"), "src dst weight time; period 10, seed 3", &periodic)?;

    let planted = gen::planted_matrix(500, 40, 3, 0.01, 0);
    let mut w = BufWriter::new(File::create(dir.join("planted_rank3.csv"))?);
    let header: Vec<String> = (0..planted.x.ncols()).map(|j| format!("c{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in planted.x.rows() {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    println!("wrote data files to {}", dir.display());
    Ok(())
}
