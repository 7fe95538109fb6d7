use std::fs;
use std::path::Path;
use std::sync::Arc;

use nlst_geo::text::{parse_geometry, parse_mpoint, parse_period};
use nlst_geo::{Geometry, Instant};
use serde::Deserialize;

use super::{CatalogError, Database, Relation};
use crate::value::{AttrKind, AttributeDef, Tuple, Value};

#[derive(Debug, Deserialize)]
struct CatalogFile {
    name: String,
    #[serde(default = "default_epoch")]
    epoch: String,
    relations: Vec<RelationDecl>,
}

fn default_epoch() -> String {
    "day0".into()
}

#[derive(Debug, Deserialize)]
struct RelationDecl {
    name: String,
    file: String,
    attributes: Vec<AttrDecl>,
}

#[derive(Debug, Deserialize)]
struct AttrDecl {
    name: String,
    kind: String,
    #[serde(default)]
    indexed: bool,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CatalogError + '_ {
    move |source| CatalogError::Io { path: path.display().to_string(), source }
}

/// Loads `catalog.json` plus one TSV file per declared relation.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Database, CatalogError> {
    let dir = dir.as_ref();
    let cat_path = dir.join("catalog.json");
    if !cat_path.is_file() {
        return Err(CatalogError::MissingCatalog(dir.display().to_string()));
    }
    let raw = fs::read_to_string(&cat_path).map_err(io_err(&cat_path))?;
    let cat: CatalogFile = serde_json::from_str(&raw).map_err(|e| CatalogError::InvalidCatalog(e.to_string()))?;

    let mut relations = Vec::with_capacity(cat.relations.len());
    for decl in cat.relations {
        let attributes = decl
            .attributes
            .iter()
            .map(|a| {
                AttrKind::parse(&a.kind)
                    .map(|kind| AttributeDef { name: a.name.clone(), kind, indexed: a.indexed })
                    .ok_or_else(|| {
                        CatalogError::InvalidCatalog(format!("unknown kind '{}' for {}.{}", a.kind, decl.name, a.name))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let path = dir.join(&decl.file);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let tuples = parse_tsv(&decl.name, &attributes, &text)?;
        relations.push(Relation::new(decl.name, attributes, tuples)?);
    }
    Ok(Database::new(cat.name, cat.epoch, relations))
}

fn parse_tsv(relation: &str, attrs: &[AttributeDef], text: &str) -> Result<Vec<Tuple>, CatalogError> {
    let mismatch = |row: usize, msg: String| CatalogError::SchemaMismatch { relation: relation.to_string(), row, msg };
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().map(|h| h.split('\t').collect()).unwrap_or_default();
    let expected: Vec<&str> = attrs.iter().map(|a| a.name.as_str()).collect();
    if header != expected {
        return Err(mismatch(0, format!("header {header:?} does not match attributes {expected:?}")));
    }
    let mut tuples = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != attrs.len() {
            return Err(mismatch(row, format!("{} values for {} attributes", cells.len(), attrs.len())));
        }
        let values = cells
            .iter()
            .zip(attrs)
            .map(|(cell, a)| parse_cell(relation, row, a, cell))
            .collect::<Result<Vec<Value>, _>>()?;
        tuples.push(values.into());
    }
    Ok(tuples)
}

fn parse_cell(relation: &str, row: usize, attr: &AttributeDef, cell: &str) -> Result<Value, CatalogError> {
    let mismatch = |msg: String| CatalogError::SchemaMismatch { relation: relation.to_string(), row, msg };
    let bad_geom = |msg: String| CatalogError::BadGeometry { relation: relation.to_string(), row, msg };
    let geometry = |want: AttrKind| -> Result<Value, CatalogError> {
        let g = parse_geometry(cell).map_err(|e| bad_geom(e.to_string()))?;
        let got = match &g {
            Geometry::Point(_) => AttrKind::Point,
            Geometry::Line(_) => AttrKind::Line,
            Geometry::Region(_) => AttrKind::Region,
        };
        if got != want {
            return Err(mismatch(format!("attribute '{}' expects {want}, got {got}", attr.name)));
        }
        Ok(Value::from_geometry(g))
    };
    match attr.kind {
        AttrKind::Int => cell
            .trim()
            .parse()
            .map(Value::Int)
            .map_err(|_| mismatch(format!("'{cell}' is not an int for '{}'", attr.name))),
        AttrKind::Real => match cell.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Value::Real(v)),
            _ => Err(mismatch(format!("'{cell}' is not a real for '{}'", attr.name))),
        },
        AttrKind::Text => Ok(Value::Text(cell.to_string())),
        AttrKind::Point | AttrKind::Line | AttrKind::Region => geometry(attr.kind),
        AttrKind::Mpoint => parse_mpoint(cell).map(|m| Value::Mpoint(Arc::new(m))).map_err(|e| bad_geom(e.to_string())),
        AttrKind::Instant => cell
            .trim()
            .parse::<i64>()
            .ok()
            .and_then(|t| Instant::new(t).ok())
            .map(Value::Instant)
            .ok_or_else(|| mismatch(format!("'{cell}' is not an instant for '{}'", attr.name))),
        AttrKind::Period => parse_period(cell).map(Value::Period).map_err(|e| mismatch(e.to_string())),
    }
}
