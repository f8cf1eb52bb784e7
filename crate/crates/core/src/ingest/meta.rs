use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{IngestError, MetaColumnMap};

/// User-reported household metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HomeMeta {
    pub home_id: String,
    pub occupant_count: Option<u32>,
    /// ft².
    pub floor_area: Option<f64>,
    pub country: Option<String>,
    /// Every other metadata column, as read.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl HomeMeta {
    pub fn bare(home_id: impl Into<String>) -> Self {
        HomeMeta {
            home_id: home_id.into(),
            ..HomeMeta::default()
        }
    }
}

/// Parse the metadata CSV. Output is in file order; ids must be unique.
pub fn parse_metadata<R: Read>(
    reader: R,
    map: &MetaColumnMap,
) -> Result<Vec<HomeMeta>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let pos = |name: &str| header.iter().position(|h| h == name);
    let id_col = pos(&map.home_id)
        .ok_or_else(|| IngestError::Metadata(format!("no '{}' column", map.home_id)))?;
    let occ_col = pos(&map.occupant_count);
    let area_col = pos(&map.floor_area);
    let country_col = pos(&map.country);

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let get = |i: Option<usize>| {
            i.and_then(|i| rec.get(i))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };
        let Some(home_id) = get(Some(id_col)) else {
            continue;
        };
        if !seen.insert(home_id.to_string()) {
            return Err(IngestError::DuplicateHome(home_id.to_string()));
        }
        // Occupant counts are sometimes exported as floats ("1.0").
        let occupant_count = get(occ_col)
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|v| *v >= 1.0 && v.fract() == 0.0)
            .map(|v| v as u32);
        let floor_area = get(area_col)
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|v| *v > 0.0);
        let extra = header
            .iter()
            .enumerate()
            .filter(|(i, _)| ![Some(id_col), occ_col, area_col, country_col].contains(&Some(*i)))
            .filter_map(|(i, h)| get(Some(i)).map(|v| (h.clone(), v.to_string())))
            .collect();
        out.push(HomeMeta {
            home_id: home_id.to_string(),
            occupant_count,
            floor_area,
            country: get(country_col).map(str::to_string),
            extra,
        });
    }
    Ok(out)
}

/// Write metadata with the default header names, extra columns appended in sorted order.
pub fn write_metadata<W: Write>(writer: W, metas: &[HomeMeta]) -> Result<(), IngestError> {
    let map = MetaColumnMap::default();
    let extra: BTreeSet<&str> = metas
        .iter()
        .flat_map(|m| m.extra.keys().map(String::as_str))
        .collect();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        map.home_id.as_str(),
        map.occupant_count.as_str(),
        map.floor_area.as_str(),
        map.country.as_str(),
    ];
    header.extend(extra.iter().copied());
    w.write_record(&header)?;
    for m in metas {
        let mut row = vec![
            m.home_id.clone(),
            m.occupant_count.map(|v| v.to_string()).unwrap_or_default(),
            m.floor_area.map(|v| v.to_string()).unwrap_or_default(),
            m.country.clone().unwrap_or_default(),
        ];
        row.extend(extra.iter().map(|k| m.extra.get(*k).cloned().unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_and_extra_columns() {
        let csv = "Identifier,Number of Occupants,Floor Area [ft2],Country,Style\n\
                   a1,1,1500,US,Ranch\n\
                   a2,,,CA,\n";
        let metas = parse_metadata(csv.as_bytes(), &MetaColumnMap::default()).unwrap();
        assert_eq!(metas.len(), 2);
        assert_eq!(metas[0].occupant_count, Some(1));
        assert_eq!(metas[0].floor_area, Some(1500.0));
        assert_eq!(metas[0].extra["Style"], "Ranch");
        assert_eq!(metas[1].occupant_count, None);
        assert_eq!(metas[1].country.as_deref(), Some("CA"));
    }

    #[test]
    fn duplicate_id_rejected() {
        let csv = "Identifier\na\na\n";
        assert!(matches!(
            parse_metadata(csv.as_bytes(), &MetaColumnMap::default()),
            Err(IngestError::DuplicateHome(_))
        ));
    }

    #[test]
    fn write_then_parse() {
        let mut m = HomeMeta::bare("x");
        m.occupant_count = Some(2);
        m.extra.insert("Province".into(), "ON".into());
        let mut buf = Vec::new();
        write_metadata(&mut buf, &[m.clone(), HomeMeta::bare("y")]).unwrap();
        let back = parse_metadata(buf.as_slice(), &MetaColumnMap::default()).unwrap();
        assert_eq!(back, vec![m, HomeMeta::bare("y")]);
    }
}
