#!/usr/bin/env python3
# Copyright 2026 The SIRL Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Plots TPA-vs-M and FPE-vs-N curves from sweep CSV output.

Usage: plot_results.py RUN_DIR [--out DIR]

Reads RUN_DIR/tpa.csv and RUN_DIR/fpe.csv (either may be missing) and writes
one PNG per (metric, env, N) group with the mean over seeds and a standard
error band.
"""

import argparse
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def mean_sem(frame, by):
  g = frame.groupby(by)["value"]
  out = g.agg(["mean", "count", "std"]).reset_index()
  out["sem"] = (out["std"] / out["count"].pow(0.5)).fillna(0.0)
  return out


def plot_tpa(frame, out_dir):
  written = []
  for (env, n), group in frame.groupby(["env", "n"]):
    fig, ax = plt.subplots(figsize=(5, 4))
    for method, rows in group.groupby("method"):
      stats = mean_sem(rows, "m").sort_values("m")
      ax.plot(stats["m"], stats["mean"], marker="o", label=method)
      ax.fill_between(stats["m"], stats["mean"] - stats["sem"],
                      stats["mean"] + stats["sem"], alpha=0.2)
    ax.set_xlabel("preference queries M")
    ax.set_ylabel("test preference accuracy")
    ax.set_title(f"{env}, N={n}")
    ax.legend()
    path = out_dir / f"tpa_{env}_n{n}.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
  return written


def plot_fpe(frame, out_dir):
  written = []
  for env, group in frame.groupby("env"):
    fig, ax = plt.subplots(figsize=(5, 4))
    for method, rows in group.groupby("method"):
      stats = mean_sem(rows, "n").sort_values("n")
      # Methods without a query budget show up as a single point at n=0.
      ax.errorbar(stats["n"], stats["mean"], yerr=stats["sem"], marker="o",
                  capsize=3, label=method)
    ax.set_xlabel("representation queries N")
    ax.set_ylabel("feature prediction error")
    ax.set_yscale("log")
    ax.set_title(env)
    ax.legend()
    path = out_dir / f"fpe_{env}.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
  return written


def main(argv):
  parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
  parser.add_argument("run_dir", type=pathlib.Path)
  parser.add_argument("--out", type=pathlib.Path, default=None)
  args = parser.parse_args(argv)
  out_dir = args.out or args.run_dir
  out_dir.mkdir(parents=True, exist_ok=True)

  written = []
  tpa = args.run_dir / "tpa.csv"
  fpe = args.run_dir / "fpe.csv"
  if tpa.exists():
    written += plot_tpa(pd.read_csv(tpa), out_dir)
  if fpe.exists():
    written += plot_fpe(pd.read_csv(fpe), out_dir)
  if not written:
    print(f"no tpa.csv or fpe.csv in {args.run_dir}", file=sys.stderr)
    return 3
  for path in written:
    print(path)
  return 0


if __name__ == "__main__":
  sys.exit(main(sys.argv[1:]))
