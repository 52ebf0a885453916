"""CSV input/output for cohort files and preprocessed sample sets.

File formats (headers are fixed and checked exactly):

  profiles.csv      patient_id,age,gender,nyha,lvef_pct,diabetes,av_block,lbbb,lives_alone,anxiety
  measurements.csv  patient_id,date,weight_kg,sys_bp_mmhg,dia_bp_mmhg,spo2_pct,hr_bpm,sinus_rhythm,vt,af,wellbeing,complaints
  events.csv        patient_id,date,kind

Empty fields mean "missing". Dates are ISO-8601. Booleans are 0/1.
All floats are written with repr() so a parse/re-write round trip is
byte-identical.
"""

from __future__ import annotations

import csv
from datetime import date as Date
from pathlib import Path

from . import features
from .errors import ParseError, ValidationError
from .records import DailyMeasurement, ClinicalEvent, PatientProfile, check_event_ordering

PROFILE_HEADER = [
    "patient_id", "age", "gender", "nyha", "lvef_pct",
    "diabetes", "av_block", "lbbb", "lives_alone", "anxiety",
]
MEASUREMENT_HEADER = [
    "patient_id", "date", "weight_kg", "sys_bp_mmhg", "dia_bp_mmhg", "spo2_pct",
    "hr_bpm", "sinus_rhythm", "vt", "af", "wellbeing", "complaints",
]
EVENT_HEADER = ["patient_id", "date", "kind"]

PROFILE_FILE = "profiles.csv"
MEASUREMENT_FILE = "measurements.csv"
EVENT_FILE = "events.csv"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_bool(raw: str, *, file: str, line: int, column: str) -> bool:
    if raw == "0":
        return False
    if raw == "1":
        return True
    raise ParseError(f"expected 0 or 1, got {raw!r}", file=file, line=line, column=column)


def _parse_date(raw: str, *, file: str, line: int, column: str) -> Date:
    try:
        return Date.fromisoformat(raw)
    except ValueError as exc:
        raise ParseError(f"bad date {raw!r}: {exc}", file=file, line=line, column=column) from exc


def _parse_float(raw: str, *, file: str, line: int, column: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ParseError(f"bad number {raw!r}", file=file, line=line, column=column) from exc


def _parse_int(raw: str, *, file: str, line: int, column: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ParseError(f"bad integer {raw!r}", file=file, line=line, column=column) from exc


def _read_rows(path: str | Path, header: list[str]):
    """Yield (line_number, row) for a CSV file, checking the header exactly."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected header", file=str(path), line=1) from None
        if first != header:
            raise ParseError(
                f"bad header {','.join(first)!r}, expected {','.join(header)!r}",
                file=str(path), line=1,
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}",
                    file=str(path), line=line_no,
                )
            yield line_no, row


def read_profiles(path: str | Path) -> list[PatientProfile]:
    file = str(path)
    profiles = []
    seen: set[str] = set()
    for line_no, row in _read_rows(path, PROFILE_HEADER):
        pid = row[0]
        if pid in seen:
            raise ParseError(f"duplicate patient_id {pid!r}", file=file, line=line_no, column="patient_id")
        seen.add(pid)
        gender = row[2]
        if gender not in ("F", "M"):
            raise ParseError(f"gender must be F or M, got {gender!r}", file=file, line=line_no, column="gender")
        profile = PatientProfile(
            patient_id=pid,
            age=_parse_int(row[1], file=file, line=line_no, column="age"),
            gender=gender,
            nyha_class=row[3],
            lvef_pct=_parse_float(row[4], file=file, line=line_no, column="lvef_pct"),
            diabetes=_parse_bool(row[5], file=file, line=line_no, column="diabetes"),
            av_block=_parse_bool(row[6], file=file, line=line_no, column="av_block"),
            lbbb=_parse_bool(row[7], file=file, line=line_no, column="lbbb"),
            lives_alone=_parse_bool(row[8], file=file, line=line_no, column="lives_alone"),
            anxiety=_parse_bool(row[9], file=file, line=line_no, column="anxiety"),
        )
        try:
            profile.validate()
        except ValidationError as exc:
            raise ParseError(str(exc), file=file, line=line_no) from exc
        profiles.append(profile)
    return profiles


def read_measurements(path: str | Path, known_patients: set[str]) -> list[DailyMeasurement]:
    file = str(path)
    measurements = []
    seen: dict[tuple[str, Date], int] = {}
    for line_no, row in _read_rows(path, MEASUREMENT_HEADER):
        pid = row[0]
        if pid not in known_patients:
            raise ParseError(f"unknown patient_id {pid!r}", file=file, line=line_no, column="patient_id")
        day = _parse_date(row[1], file=file, line=line_no, column="date")
        if (pid, day) in seen:
            raise ParseError(
                f"duplicate measurement for patient {pid!r} on {day.isoformat()} "
                f"(first seen at line {seen[(pid, day)]})",
                file=file, line=line_no,
            )
        seen[(pid, day)] = line_no

        def opt_float(idx: int, column: str) -> float | None:
            return None if row[idx] == "" else _parse_float(row[idx], file=file, line=line_no, column=column)

        def opt_bool(idx: int, column: str) -> bool | None:
            return None if row[idx] == "" else _parse_bool(row[idx], file=file, line=line_no, column=column)

        m = DailyMeasurement(
            patient_id=pid,
            date=day,
            weight_kg=opt_float(2, "weight_kg"),
            sys_bp_mmhg=opt_float(3, "sys_bp_mmhg"),
            dia_bp_mmhg=opt_float(4, "dia_bp_mmhg"),
            spo2_pct=opt_float(5, "spo2_pct"),
            hr_bpm=opt_float(6, "hr_bpm"),
            sinus_rhythm=opt_bool(7, "sinus_rhythm"),
            ventricular_tachycardia=opt_bool(8, "vt"),
            atrial_fibrillation=opt_bool(9, "af"),
            wellbeing=None if row[10] == "" else _parse_int(row[10], file=file, line=line_no, column="wellbeing"),
            complaints=opt_bool(11, "complaints"),
        )
        try:
            m.validate()
        except ValidationError as exc:
            raise ParseError(str(exc), file=file, line=line_no) from exc
        measurements.append(m)
    return measurements


def read_events(path: str | Path, known_patients: set[str]) -> list[ClinicalEvent]:
    file = str(path)
    events = []
    for line_no, row in _read_rows(path, EVENT_HEADER):
        pid = row[0]
        if pid not in known_patients:
            raise ParseError(f"unknown patient_id {pid!r}", file=file, line=line_no, column="patient_id")
        ev = ClinicalEvent(
            patient_id=pid,
            date=_parse_date(row[1], file=file, line=line_no, column="date"),
            kind=row[2],
        )
        try:
            ev.validate()
        except ValidationError as exc:
            raise ParseError(str(exc), file=file, line=line_no, column="kind") from exc
        events.append(ev)
    try:
        check_event_ordering(events)
    except ValidationError as exc:
        raise ParseError(str(exc), file=file) from exc
    return events


def parse_cohort(
    profiles_file: str | Path,
    measurements_file: str | Path,
    events_file: str | Path,
) -> tuple[list[PatientProfile], list[DailyMeasurement], list[ClinicalEvent]]:
    """Parse the three cohort CSVs, validating every record.

    Raises ParseError with file/line/column context on malformed rows,
    out-of-range values, unknown patient ids and duplicate measurement days.
    """
    profiles = read_profiles(profiles_file)
    known = {p.patient_id for p in profiles}
    measurements = read_measurements(measurements_file, known)
    events = read_events(events_file, known)
    return profiles, measurements, events


def load_cohort_dir(data_dir: str | Path):
    """parse_cohort() over the standard file names inside one directory."""
    d = Path(data_dir)
    return parse_cohort(d / PROFILE_FILE, d / MEASUREMENT_FILE, d / EVENT_FILE)


def write_cohort(
    out_dir: str | Path,
    profiles: list[PatientProfile],
    measurements: list[DailyMeasurement],
    events: list[ClinicalEvent],
) -> None:
    """Write the three cohort CSVs; output is byte-deterministic."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / PROFILE_FILE, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_HEADER)
        for p in profiles:
            w.writerow([
                p.patient_id, p.age, p.gender, p.nyha_class, _fmt(p.lvef_pct),
                _fmt(p.diabetes), _fmt(p.av_block), _fmt(p.lbbb),
                _fmt(p.lives_alone), _fmt(p.anxiety),
            ])
    with open(out / MEASUREMENT_FILE, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MEASUREMENT_HEADER)
        for m in measurements:
            w.writerow([
                m.patient_id, m.date.isoformat(), _fmt(m.weight_kg), _fmt(m.sys_bp_mmhg),
                _fmt(m.dia_bp_mmhg), _fmt(m.spo2_pct), _fmt(m.hr_bpm), _fmt(m.sinus_rhythm),
                _fmt(m.ventricular_tachycardia), _fmt(m.atrial_fibrillation),
                _fmt(m.wellbeing), _fmt(m.complaints),
            ])
    with open(out / EVENT_FILE, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EVENT_HEADER)
        for ev in events:
            w.writerow([ev.patient_id, ev.date.isoformat(), ev.kind])


SAMPLE_HEADER = ["patient_id", "date", "label", *features.FEATURE_NAMES]
SCALER_HEADER = ["feature", "mean", "std"]


def write_samples(path: str | Path, samples) -> None:
    """Write one split set: provenance, label, then the feature columns."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SAMPLE_HEADER)
        for s in samples:
            w.writerow([s.patient_id, s.date.isoformat(), _fmt(s.label),
                        *[repr(float(v)) for v in s.features]])


def read_samples(path: str | Path):
    from .pipeline import LabeledSample  # local import to avoid a cycle

    file = str(path)
    samples = []
    for line_no, row in _read_rows(path, SAMPLE_HEADER):
        values = [_parse_float(v, file=file, line=line_no, column=SAMPLE_HEADER[3 + i])
                  for i, v in enumerate(row[3:])]
        samples.append(LabeledSample(
            patient_id=row[0],
            date=_parse_date(row[1], file=file, line=line_no, column="date"),
            features=_to_array(values),
            label=_parse_bool(row[2], file=file, line=line_no, column="label"),
        ))
    return samples


def _to_array(values):
    import numpy as np

    return np.asarray(values, dtype=np.float64)


def write_scaler(path: str | Path, scaler) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCALER_HEADER)
        for name, mean, std in zip(features.FEATURE_NAMES, scaler.means, scaler.stds):
            w.writerow([name, repr(float(mean)), repr(float(std))])


def read_scaler(path: str | Path):
    from .pipeline import FeatureScaler

    file = str(path)
    means, stds, names = [], [], []
    for line_no, row in _read_rows(path, SCALER_HEADER):
        names.append(row[0])
        means.append(_parse_float(row[1], file=file, line=line_no, column="mean"))
        stds.append(_parse_float(row[2], file=file, line=line_no, column="std"))
    if list(names) != list(features.FEATURE_NAMES):
        raise ParseError("scaler features do not match the feature schema", file=file)
    return FeatureScaler(means=_to_array(means), stds=_to_array(stds))
