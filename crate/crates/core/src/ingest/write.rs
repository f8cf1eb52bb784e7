use std::io::Write;

use chrono::NaiveDateTime;

use super::{IngestError, Sample};

/// Header of the canonical per-home CSV. Readable with the default [`ColumnMap`](super::ColumnMap).
pub const HOME_CSV_HEADER: [&str; 9] = [
    "DateTime",
    "Event",
    "T_stp_heat",
    "T_stp_cool",
    "T_ctrl",
    "T_out",
    "Thermostat_Motion",
    "compHeat1",
    "compCool1",
];

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format("%Y-%m-%d %H:%M:%S").to_string()
}

/// Write samples in the canonical layout: temperatures in °F with three decimals,
/// motion as `1`/`0`, runtimes as integer seconds.
pub fn write_home_csv<W: Write>(writer: W, samples: &[Sample]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HOME_CSV_HEADER)?;
    for s in samples {
        w.write_record([
            format_timestamp(&s.timestamp),
            s.event.token().to_string(),
            format!("{:.3}", s.heat_setpoint),
            format!("{:.3}", s.cool_setpoint),
            format!("{:.3}", s.indoor_temp),
            s.outdoor_temp.map(|t| format!("{t:.3}")).unwrap_or_default(),
            if s.motion { "1" } else { "0" }.to_string(),
            s.heat_runtime.to_string(),
            s.cool_runtime.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_home, ColumnMap};

    #[test]
    fn clean_fixture_round_trips_byte_for_byte() {
        let fixture = "DateTime,Event,T_stp_heat,T_stp_cool,T_ctrl,T_out,Thermostat_Motion,compHeat1,compCool1\n\
                       2017-03-01 07:00:00,sleep,64.000,78.000,64.500,31.200,0,300,0\n\
                       2017-03-01 07:05:00,hold_2h,69.000,78.000,64.700,,1,300,0\n";
        let home = parse_home(fixture.as_bytes(), "h", &ColumnMap::default()).unwrap();
        let mut out = Vec::new();
        write_home_csv(&mut out, &home.samples).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), fixture);
    }
}
