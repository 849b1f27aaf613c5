//! Exact round-trip cache of an aligned attribute table.
//!
//! CSV with `external_id`, the feature columns and, when present, the three
//! attitude columns. Nodes without an attitude leave those cells empty.

use old_core::graph::{AttributeTable, Attitude};
use old_core::{DirectedGraph, NodeId};

use crate::error::CliError;

const ATTITUDE_COLUMNS: [&str; 3] = ["attitude_support", "attitude_reject", "attitude_irrelevant"];

pub fn write_attributes(table: &AttributeTable, graph: &DirectedGraph) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["external_id".to_owned()];
    header.extend(table.columns().iter().cloned());
    if table.has_attitudes() {
        header.extend(ATTITUDE_COLUMNS.iter().map(|s| s.to_string()));
    }
    w.write_record(&header).map_err(csv_err)?;
    for v in graph.nodes() {
        let mut row = vec![graph.external_id(v).to_owned()];
        row.extend(table.row(v).iter().map(|x| format!("{x:?}")));
        if table.has_attitudes() {
            match table.attitude(v) {
                Some(a) => row.extend([a.support, a.reject, a.irrelevant].iter().map(|x| format!("{x:?}"))),
                None => row.extend(std::iter::repeat_n(String::new(), 3)),
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Validation(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Validation(format!("attribute cache: {e}"))
}

fn number(cell: &str, line: usize) -> Result<f64, CliError> {
    cell.parse()
        .map_err(|_| CliError::Validation(format!("attribute cache line {line}: bad number {cell:?}")))
}

pub fn read_attributes(bytes: &[u8], graph: &DirectedGraph) -> Result<AttributeTable, CliError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = r.headers().map_err(csv_err)?.clone();
    let has_attitudes = header.len() >= 4 && header.iter().rev().take(3).eq(ATTITUDE_COLUMNS.iter().rev().copied());
    let dim = header.len() - 1 - if has_attitudes { 3 } else { 0 };
    let columns: Vec<String> = header.iter().skip(1).take(dim).map(str::to_owned).collect();

    let mut rows = vec![Vec::new(); graph.node_count()];
    let mut attitudes = vec![None; graph.node_count()];
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = k + 2;
        let v: NodeId = graph
            .node_id(&rec[0])
            .ok_or_else(|| CliError::Validation(format!("attribute cache line {line}: unknown node {:?}", &rec[0])))?;
        rows[v.index()] = (1..=dim).map(|c| number(&rec[c], line)).collect::<Result<_, _>>()?;
        if has_attitudes && !rec[dim + 1].is_empty() {
            let t: Vec<f64> = (dim + 1..dim + 4).map(|c| number(&rec[c], line)).collect::<Result<_, _>>()?;
            attitudes[v.index()] = Some(Attitude::new(t[0], t[1], t[2])?);
        }
    }
    if rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Validation("attribute cache does not cover every node".into()));
    }
    let mut table = if rows.is_empty() || dim == 0 {
        AttributeTable::zeros(rows.len(), dim)
    } else {
        AttributeTable::from_rows(rows)?
    };
    table = table.with_columns(columns)?;
    if has_attitudes {
        table = table.with_attitudes(attitudes)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let g = DirectedGraph::from_edge_indices(3, &[(0, 1), (1, 2)]).unwrap();
        let table = AttributeTable::from_rows(vec![vec![0.1, 1e-300], vec![1.0 / 3.0, -2.5], vec![0.0, 7.0]])
            .unwrap()
            .with_columns(vec!["views".into(), "days".into()])
            .unwrap()
            .with_attitudes(vec![Some(Attitude::new(0.2, 0.3, 0.5).unwrap()), None, Some(Attitude::new(1.0, 0.0, 0.0).unwrap())])
            .unwrap();
        let bytes = write_attributes(&table, &g).unwrap();
        assert_eq!(read_attributes(&bytes, &g).unwrap(), table);

        let plain = AttributeTable::from_rows(vec![vec![1.0]; 3]).unwrap();
        let bytes = write_attributes(&plain, &g).unwrap();
        assert_eq!(read_attributes(&bytes, &g).unwrap(), plain);
    }
}
