#!/usr/bin/env python3
"""Emit closed-form partial derivatives of the half-plane Stokes Poisson kernel.

Writes src/generated/kernel_derivs.inc; rerun after changing the kernel.
"""
import pathlib
import sympy as sp

t, y = sp.symbols("t y", real=True)
pref = 2 * y / (sp.pi * (t**2 + y**2) ** 2)
G = [pref * t**2, pref * t * y, pref * t * y, pref * y**2]

out = ["// Generated by tools/gen_kernel_derivs.py. Do not edit.", ""]
cases = []
for order in range(4):
    for b1 in range(order + 1):
        b2 = order - b1
        exprs = [sp.together(sp.diff(g, t, b1, y, b2)) if order else g for g in G]
        subs, red = sp.cse(exprs, symbols=sp.numbered_symbols("c"))
        body = [f"  case {b1 * 4 + b2}: {{"]
        for s, e in subs:
            body.append(f"    const double {s} = {sp.ccode(e)};")
        entries = ", ".join(sp.ccode(e) for e in red)
        body.append(f"    return {{{entries}}};")
        body.append("  }")
        cases.append("\n".join(body))

out.append("inline std::array<double, 4> stokes_poisson_deriv_table(int b1, int b2, double t, double y) {")
out.append("  switch (b1 * 4 + b2) {")
out.extend(cases)
out.append("  default: return {0, 0, 0, 0};")
out.append("  }")
out.append("}")
text = "\n".join(out).replace("M_PI", "kPi") + "\n"
dest = pathlib.Path(__file__).resolve().parent.parent / "src" / "generated" / "kernel_derivs.inc"
dest.write_text(text)
print(f"wrote {dest}")
