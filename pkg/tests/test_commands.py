import csv
import io
import json
from pathlib import Path

import pytest

import click
from click.testing import CliRunner

from online_regression.commands import cli
from online_regression.commands.ingest import parse_schema
from online_regression.reports import SessionReport


SMALL = "SYNTH_ND_NCD_200_1_10_1_11"


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def test_gen_writes_named_datasets(runner: CliRunner, tmp_path: Path) -> None:
    result = runner.invoke(cli, ["gen", "--name", SMALL, "--name", "SYNTH_D_CD_200_2_50_3_14", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / f"{SMALL}.csv").read_text().splitlines()
    assert lines[0] == "x1,y"
    assert len(lines) == 201
    assert (tmp_path / "SYNTH_D_CD_200_2_50_3_14.csv").exists()


def test_gen_requires_a_selection(runner: CliRunner, tmp_path: Path) -> None:
    assert runner.invoke(cli, ["gen", "--out", str(tmp_path)]).exit_code == 2

    result = runner.invoke(cli, ["gen", "--name", "SYNTH_BAD", "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "malformed dataset name" in result.output


def test_run_on_a_generated_dataset(runner: CliRunner) -> None:
    result = runner.invoke(cli, ["run", "--learner", "MeanBaseline", "--dataset", SMALL, "--trace", "--window", "10"])
    assert result.exit_code == 0, result.output
    report = SessionReport.parse_raw(result.output)
    assert report.dataset == SMALL
    assert report.metrics.item_count == 200
    assert len(report.traces.windowed_rmse) == 200


def test_run_on_a_file_writes_the_report(runner: CliRunner, tmp_path: Path) -> None:
    runner.invoke(cli, ["gen", "--name", SMALL, "--out", str(tmp_path)])
    out = tmp_path / "report.json"
    dataset = str(tmp_path / f"{SMALL}.csv")
    result = runner.invoke(
        cli, ["run", "--learner", "BayesianMLEWindowed_WS32", "--dataset", dataset, "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    report = SessionReport.parse_file(out)
    assert report.learner == "BayesianMLEWindowed_WS32"
    assert report.traces is None


def test_run_reports_errors(runner: CliRunner, tmp_path: Path) -> None:
    result = runner.invoke(cli, ["run", "--learner", "NoSuchLearner_WS3", "--dataset", SMALL])
    assert result.exit_code == 1
    assert "Unknown learner" in result.output

    path = tmp_path / "negative.csv"
    path.write_text("x1,y\n" + "".join(f"{-i - 1},{i}\n" for i in range(40)))
    result = runner.invoke(cli, ["run", "--learner", "BayesianMLEWindowedMapped_WS32", "--dataset", str(path)])
    assert result.exit_code == 1
    assert "Session failed" in result.output


def test_matrix_writes_one_report_per_session(runner: CliRunner, tmp_path: Path) -> None:
    datasets, reports = tmp_path / "datasets", tmp_path / "reports"
    runner.invoke(cli, ["gen", "--name", SMALL, "--name", "SYNTH_D_NCD_200_2_10_0_12", "--out", str(datasets)])
    learners = tmp_path / "learners.txt"
    learners.write_text("# roster\nMeanBaseline\n\nBayesianMLEWindowed_WS32  # windowed\n")

    result = runner.invoke(
        cli,
        ["matrix", "--learners", str(learners), "--datasets", str(datasets), "--out", str(reports)],
    )
    assert result.exit_code == 0, result.output
    assert "4 sessions" in result.output
    written = sorted(path.name for path in reports.glob("*.json"))
    assert written == [
        "SYNTH_D_NCD_200_2_10_0_12__BayesianMLEWindowed_WS32.json",
        "SYNTH_D_NCD_200_2_10_0_12__MeanBaseline.json",
        f"{SMALL}__BayesianMLEWindowed_WS32.json",
        f"{SMALL}__MeanBaseline.json",
    ]

    result = runner.invoke(cli, ["aggregate", str(reports), "--group-by", "learner", "--group-by", "continuity"])
    assert result.exit_code == 0, result.output
    rows = list(csv.DictReader(io.StringIO(result.output)))
    assert [(row["learner"], row["continuity"]) for row in rows] == [
        ("BayesianMLEWindowed_WS32", "D"),
        ("BayesianMLEWindowed_WS32", "ND"),
        ("MeanBaseline", "D"),
        ("MeanBaseline", "ND"),
    ]
    assert all(row["count"] == "1" for row in rows)

    result = runner.invoke(cli, ["aggregate", str(reports), "--format", "json"])
    (row,) = [r for r in json.loads(result.output) if r["group"]["family"] == "MeanBaseline"]
    assert row["count"] == 2


def test_matrix_needs_datasets(runner: CliRunner) -> None:
    assert runner.invoke(cli, ["matrix"]).exit_code == 2


def test_ingest(runner: CliRunner, tmp_path: Path) -> None:
    source = tmp_path / "campaign.csv"
    rows = "".join(f"scan,cpu,{i + 1},{2.0 * (i + 1)}\n" for i in range(40))
    source.write_text("operator,device,rows,runtime\n" + rows)
    out = tmp_path / "stream.csv"

    result = runner.invoke(
        cli, ["ingest", str(source), "--schema", "dims=1,meta", "--out", str(out), "--learner", "MeanBaseline"]
    )
    assert result.exit_code == 0, result.output
    assert out.read_text().splitlines()[:2] == ["x1,y", "1,2"]
    report = SessionReport.parse_raw(result.output.strip().splitlines()[-1])
    assert report.dataset == "campaign"
    assert report.metrics.item_count == 40


def test_ingest_reports_bad_rows(runner: CliRunner, tmp_path: Path) -> None:
    source = tmp_path / "campaign.csv"
    source.write_text("rows,runtime\n1,2\n2,-4\n")
    result = runner.invoke(cli, ["ingest", str(source), "--schema", "dims=1"])
    assert result.exit_code == 1
    assert "line 3" in result.output


@pytest.mark.parametrize(
    "schema, expected", [("dims=2", (2, False)), ("dims=1,meta", (1, True)), ("meta, dims=3", (3, True))]
)
def test_parse_schema(schema: str, expected: tuple) -> None:
    assert parse_schema(schema) == expected


@pytest.mark.parametrize("schema", ["", "meta", "dims=0", "dims=x", "dims=2,extra"])
def test_parse_schema_rejects(schema: str) -> None:
    with pytest.raises(click.BadParameter):
        parse_schema(schema)
