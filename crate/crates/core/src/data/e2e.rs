use std::collections::BTreeMap;
use std::path::Path;

use super::CorpusRecord;
use crate::error::{Error, Result};
use crate::mr::{AttributeKind, AttributeSchema, MeaningRepresentation};

/// Parses `attr[value], attr[value], ...`. Attribute names match the schema
/// case-insensitively; categorical and boolean values are canonicalized.
pub fn parse_mr(text: &str, schema: &AttributeSchema) -> std::result::Result<MeaningRepresentation, String> {
    let mut mr = MeaningRepresentation::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let open = rest.find('[');
        let clause_end = rest.find(',').unwrap_or(rest.len());
        let Some(open) = open.filter(|o| *o < clause_end) else {
            return Err(format!("malformed clause `{}`", rest[..clause_end].trim()));
        };
        let Some(close) = rest[open..].find(']').map(|c| c + open) else {
            return Err(format!("unclosed bracket in clause `{}`", rest.trim()));
        };
        let name = rest[..open].trim();
        let value = rest[open + 1..close].trim();
        let clause = &rest[..=close];
        let attr = schema
            .resolve(name)
            .ok_or_else(|| format!("unknown attribute `{name}` in clause `{clause}`"))?;
        let value = match attr.kind {
            AttributeKind::Delexicalized if !value.is_empty() => value.to_string(),
            AttributeKind::Delexicalized => return Err(format!("empty value in clause `{clause}`")),
            _ => attr
                .canonical_value(value)
                .ok_or_else(|| format!("value `{value}` not allowed in clause `{clause}`"))?
                .to_string(),
        };
        if mr.set(attr.name.clone(), value).is_some() {
            return Err(format!("attribute `{}` assigned twice", attr.name));
        }
        rest = rest[close + 1..].trim_start();
        match rest.strip_prefix(',') {
            Some(r) => rest = r.trim_start(),
            None if rest.is_empty() => {}
            None => return Err(format!("expected `,` after clause `{clause}`")),
        }
    }
    Ok(mr)
}

/// Reads an E2E-style CSV with a header and `mr`, `ref` columns. Records
/// keep raw name/near values; ids are `e2e-<row>`.
pub fn parse_e2e_csv(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<Vec<CorpusRecord>> {
    let path = path.as_ref();
    let csv_err = |row: usize, message: String| Error::Csv {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => csv_err(0, format!("{other:?}")),
        })?;
    let headers = reader.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
    let column = |name: &str, fallback: usize| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .unwrap_or(fallback)
    };
    let (mr_col, ref_col) = (column("mr", 0), column("ref", 1));

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        // header is row 1
        let row_no = i + 2;
        let row = row.map_err(|e| csv_err(row_no, e.to_string()))?;
        let (Some(mr_text), Some(reference)) = (row.get(mr_col), row.get(ref_col)) else {
            return Err(csv_err(row_no, "expected `mr` and `ref` columns".into()));
        };
        let mr = parse_mr(mr_text, schema).map_err(|m| csv_err(row_no, m))?;
        out.push(CorpusRecord {
            id: format!("e2e-{}", i + 1),
            mr,
            reference: reference.to_string(),
            delex: BTreeMap::new(),
        });
    }
    Ok(out)
}
