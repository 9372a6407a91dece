"""Regenerate palette.json from Munsell best-example chips.

Munsell renotation (illuminant C) -> xyY -> XYZ, Bradford-adapted to D65,
then CIE 1976 L*a*b* against the D65 2-degree white. Requires colour-science.

    python3 derive_palette.py > palette.json
"""

import json

import colour

OBSERVER = colour.CCS_ILLUMINANTS["CIE 1931 2 Degree Standard Observer"]

# Best-example chips for American English. A colour with several chips gets
# one sample per chip; the loader averages them in Lab.
CHIPS = [
    ("white", "N9.5"),
    ("black", "N1.5"),
    ("red", "5R 4/14"),
    ("red", "7.5R 4/14"),
    ("green", "2.5G 5/10"),
    ("blue", "2.5PB 4/10"),
    ("purple", "7.5P 3/10"),
    ("pink", "2.5R 8/6"),
    ("yellow", "5Y 8/12"),
]


def chip_to_lab(chip):
    xyY = colour.munsell_colour_to_xyY(chip)
    XYZ = colour.xyY_to_XYZ(xyY)
    XYZ = colour.adaptation.chromatic_adaptation_VonKries(
        XYZ,
        colour.xy_to_XYZ(OBSERVER["C"]),
        colour.xy_to_XYZ(OBSERVER["D65"]),
        transform="Bradford",
    )
    return colour.XYZ_to_Lab(XYZ, OBSERVER["D65"])


def main():
    samples = []
    for name, chip in CHIPS:
        L, a, b = (round(float(v), 4) + 0.0 for v in chip_to_lab(chip))
        samples.append(
            {"name": name, "L": L, "a": a, "b": b, "provenance": f"Munsell {chip}"}
        )
    doc = {
        "schema_id": "tiam.palette/v1",
        "white_point": "D65",
        "observer": "2deg",
        "derivation": (
            "Munsell renotation (illuminant C) -> xyY -> XYZ, Bradford to D65, "
            "-> CIELAB; samples sharing a name are averaged in Lab on load"
        ),
        "attribute_names": ["red", "green", "blue", "purple", "pink", "yellow"],
        "entries": samples,
    }
    print(json.dumps(doc, indent=2))


if __name__ == "__main__":
    main()
