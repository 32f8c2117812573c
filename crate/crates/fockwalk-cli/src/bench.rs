//! Complexity curves: dry traversals of the four strategies at a fixed mode
//! count, growing cutoff. No amplitude arithmetic runs anywhere here — the
//! point is the pivot/amplitude/buffer scaling, which is why the naive
//! baseline walks its 4.3e8-cell box with an allocation-free odometer
//! instead of materializing 6.9 GB.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::Context;

pub const BENCH_MODES: usize = 4;
pub const BENCH_CUTOFFS: [usize; 5] = [4, 6, 8, 10, 12];

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub strategy: &'static str,
    pub cutoff: usize,
    pub pivots: u64,
    pub amplitudes: u64,
    pub peak_bytes: u64,
    pub wall_ms: u128,
}

/// Count trailing-ownership pivots of a uniform box `[c; d]` by odometer:
/// cells owning at least one in-bounds write, i.e. cells where some axis at
/// or after the last nonzero one is below `c − 1`.
fn box_pivots(c: usize, d: usize) -> u64 {
    let top = c - 1;
    let mut k = vec![0usize; d];
    let mut pivots = 0u64;
    loop {
        let start = k.iter().rposition(|&x| x != 0).unwrap_or(0);
        if k[start..].iter().any(|&x| x < top) {
            pivots += 1;
        }
        // Odometer increment, most-significant rollover ends the walk.
        let mut axis = d;
        loop {
            if axis == 0 {
                return pivots;
            }
            axis -= 1;
            if k[axis] + 1 < c {
                k[axis] += 1;
                for x in &mut k[axis + 1..] {
                    *x = 0;
                }
                break;
            }
        }
    }
}

fn measure(strategy: &'static str, c: usize) -> anyhow::Result<BenchRow> {
    let start = Instant::now();
    let m = BENCH_MODES;
    let (pivots, amplitudes, peak_cells) = match strategy {
        "statevec" => {
            let cells = (c as u64).pow(m as u32);
            (box_pivots(c, m), cells, cells)
        }
        "gbs_diag" => {
            let counters = fockwalk::gbs::measure_written(&vec![c; m])?;
            (counters.pivots_applied, counters.cells_written, counters.peak_cells)
        }
        "conditional" => {
            // One undetected mode: detect modes 2..=m (zero-based 1..m).
            let detected: Vec<usize> = (1..m).collect();
            let counters = fockwalk::conditional::measure_conditional(&vec![c; m], &detected)?;
            (counters.pivots_applied, counters.cells_written, counters.peak_cells)
        }
        "naive_dense" => {
            let cells = (c as u64).pow(2 * m as u32);
            (box_pivots(c, 2 * m), cells, cells)
        }
        other => anyhow::bail!("unknown strategy {other}"),
    };
    let row = BenchRow {
        strategy,
        cutoff: c,
        pivots,
        amplitudes,
        peak_bytes: peak_cells * 16,
        wall_ms: start.elapsed().as_millis(),
    };
    eprintln!(
        "bench {strategy:<11} C={c:<2} pivots={pivots:<12} amplitudes={amplitudes:<12} ({} ms)",
        row.wall_ms
    );
    Ok(row)
}

/// Walk every strategy over the cutoff grid.
pub fn collect_rows() -> anyhow::Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for strategy in ["statevec", "gbs_diag", "conditional", "naive_dense"] {
        for c in BENCH_CUTOFFS {
            rows.push(measure(strategy, c)?);
        }
    }
    Ok(rows)
}

pub fn write_csv(path: &Path, rows: &[BenchRow]) -> anyhow::Result<()> {
    let mut text = String::from("strategy,C,pivots,amplitudes,peak_bytes,wall_ms\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.strategy, r.cutoff, r.pivots, r.amplitudes, r.peak_bytes, r.wall_ms
        ));
    }
    let mut file = std::fs::File::create(path).with_context(|| format!("create {}", path.display()))?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

pub fn run(out_dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let rows = collect_rows()?;
    write_csv(&out_dir.join("complexity.csv"), &rows)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_pivot_count_has_the_closed_form() {
        // Trailing-ownership pivots of [C]^d are C^d − C^(d−1).
        for (c, d) in [(2usize, 3u32), (3, 2), (4, 4), (3, 4)] {
            let expect = (c as u64).pow(d) - (c as u64).pow(d - 1);
            assert_eq!(box_pivots(c, d as usize), expect, "C={c} d={d}");
        }
    }
}
