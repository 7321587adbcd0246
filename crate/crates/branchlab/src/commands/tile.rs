use branchlab_core::tiling::{face_label, Tiling};

use crate::config::RunConfig;
use crate::output::{num, Output, Report, Table};
use crate::RunError;

pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<(), RunError> {
    let n = cfg.usize("n")?;
    let t = Tiling::simplex(n)?;
    t.validate()?;
    let at = "exact enumeration";
    let mut report = Report::new(cfg);
    report.count("cells", t.cells().len(), at);
    report.count("group_order", t.group().len(), at);
    report.count("generators", t.generators().len(), at);

    let mut cells = Table::new(&["cell", "element", "parity", "vertices"]);
    for (i, c) in t.cells().iter().enumerate() {
        let parity = t.group()[c.element].determinant().round();
        let ids: Vec<String> = c.vertex_ids.iter().map(|v| v.to_string()).collect();
        cells.push(vec![
            i.to_string(),
            c.element.to_string(),
            num(parity),
            ids.join(" "),
        ]);
    }
    out.csv("tile_cells.csv", &cells)?;

    // codimension-2 strata are the ones a loop can wind around
    let mut strata = Table::new(&["dim", "face", "cells_around", "cycle_sign", "odd"]);
    let codim2 = n - 3;
    let mut odd = 0;
    for f in t.skeleton(codim2) {
        let w = t.cycle_witness(f)?;
        odd += usize::from(w.sign < 0);
        strata.push(vec![
            codim2.to_string(),
            face_label(f),
            w.steps.to_string(),
            w.sign.to_string(),
            (w.sign < 0).to_string(),
        ]);
    }
    out.csv("tile_strata.csv", &strata)?;
    report.count("codim2_strata", strata.len(), at);
    report.count("odd_strata", odd, at);
    out.text("tile_report.txt", report.as_str())
}
