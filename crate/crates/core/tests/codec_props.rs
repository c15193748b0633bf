use chrono::{Duration, NaiveDate};
use headway_core::trip_data::{
    parse_trip, pulse_to_distance, write_trip, PulseSample, RawReading, Trip,
};
use proptest::prelude::*;

fn reading_strategy() -> impl Strategy<Value = (i64, f64, f64, f64, f64, f64)> {
    (
        0i64..3600,
        -90.0f64..=90.0,
        -180.0f64..=180.0,
        0.0f64..120.0,
        0.0f64..360.0,
        0.0f64..=45.0,
    )
}

fn trip_strategy() -> impl Strategy<Value = Trip> {
    (
        any::<i32>(),
        0u32..20_000,
        prop::collection::vec(reading_strategy(), 0..40),
    )
        .prop_map(|(trip_id, day, rows)| {
            let start = NaiveDate::from_ymd_opt(2015, 1, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap()
                + Duration::days(i64::from(day) % 5000);
            let mut offset = 0;
            let readings = rows
                .into_iter()
                .map(|(step, lat, lon, speed, course, distance)| {
                    offset += step % 3;
                    let ts = start + Duration::seconds(offset);
                    RawReading {
                        date: ts.date(),
                        time: ts.time(),
                        latitude: lat,
                        longitude: lon,
                        speed,
                        course_over_ground: course,
                        distance,
                        trip_id: i64::from(trip_id),
                    }
                })
                .collect();
            Trip {
                trip_id: i64::from(trip_id),
                readings,
            }
        })
}

proptest! {
    #[test]
    fn write_then_parse_is_identity(trip in trip_strategy()) {
        let text = write_trip(&trip, None).unwrap();
        let parsed = parse_trip(&text).unwrap();
        if trip.readings.is_empty() {
            prop_assert!(parsed.is_empty());
        } else {
            prop_assert_eq!(parsed.len(), 1);
            prop_assert_eq!(&parsed[0], &trip);
            // and the text is a fixed point
            prop_assert_eq!(write_trip(&parsed[0], None).unwrap(), text);
        }
    }

    #[test]
    fn pulse_conversion_is_linear(a in 0u32..=20_000, b in 0u32..=20_000) {
        // integer microsecond widths, as the sensor reports them
        let (a, b) = (f64::from(a), f64::from(b));
        let da = pulse_to_distance(PulseSample::new(a)).unwrap();
        let db = pulse_to_distance(PulseSample::new(b)).unwrap();
        let dab = pulse_to_distance(PulseSample::new(a + b)).unwrap();
        prop_assert!((dab - (da + db)).abs() <= 1e-12);
    }
}
