"""
The model-file runner, command by command
==========================================

Every capability is also reachable through JSON model files and the command
line (python -m cplab <command> --model FILE).  This script drives the same
library entry points on the shipped model files and prints each report.
"""

from pathlib import Path

from cplab.runner import (cmd_canonical, cmd_davies, cmd_dbc, cmd_langevin,
                          cmd_stinespring, cmd_toy_dilation, cmd_validate,
                          cmd_wcl_extended, cmd_wcl_reduced)

MODELS = Path(__file__).resolve().parent / "models"

RUNS = [
    (cmd_validate, "lindblad_qubit.json"),
    (cmd_canonical, "lindblad_qubit.json"),
    (cmd_stinespring, "lindblad_qubit.json"),
    (cmd_dbc, "lindblad_qubit.json"),
    (cmd_validate, "classical_chain.json"),
    (cmd_wcl_reduced, "friedrichs_scalar_flat.json"),
    (cmd_wcl_extended, "friedrichs_two_band.json"),
    (cmd_davies, "pf_thermal_two_level.json"),
    (cmd_wcl_reduced, "pf_vacuum_two_level.json"),
    (cmd_toy_dilation, "toy_scalar.json"),
    (cmd_langevin, "langevin_scalar.json"),
]

for func, name in RUNS:
    report = func(MODELS / name)
    marks = " ".join(f"{c.name}={c.status}" for c in report.checks)
    tables = ", ".join(f"{k}({len(v)} rows)" for k, v in report.tables.items())
    print(f"{report.command:13s} {name:30s} exit={report.exit_code()}")
    print(f"   checks: {marks}")
    if tables:
        print(f"   tables: {tables}")
    if report.certification is not None:
        print(f"   certification: {report.certification}")
