#!/usr/bin/env python3
"""Regenerates the synthetic corpus in this directory.

Workbooks are written with shared strings and deflate compression, the way
spreadsheet programs save them, so the reader's main path is exercised.
"""
import csv
import json
import pathlib
import zipfile
from xml.sax.saxutils import escape

HERE = pathlib.Path(__file__).resolve().parent

ELEMENTS = [
    # label, type, tags, description
    ("Cognitive functioning", "stock", "0", "VOI"),
    ("Brain health", "stock", "0", ""),
    ("Depressive symptoms", "stock", "-1", ""),
    ("Blood pressure", "stock", "-1", ""),
    ("Physical activity", "auxiliary", "1", ""),
    ("Sleep quality", "Flow", "1", "fast-acting"),
    ("Social engagement", "auxiliary", "1", ""),
    ("Perceived stress", "auxiliary", "0", ""),
    ("Diabetes", "constant", "-1", ""),
]

CONNECTIONS = [
    ("Brain health", "Cognitive functioning", "+"),
    ("Cognitive functioning", "Social engagement", "+"),
    ("Social engagement", "Depressive symptoms", "-"),
    ("Depressive symptoms", "Sleep quality", "-"),
    ("Sleep quality", "Depressive symptoms", "-"),
    ("Physical activity", "Blood pressure", "-"),
    ("Physical activity", "Sleep quality", "+"),
    ("Blood pressure", "Brain health", "-"),
    ("Diabetes", "Blood pressure", "+"),
    ("Diabetes", "Brain health", "-"),
    ("Depressive symptoms", "Cognitive functioning", "-"),
    ("Perceived stress", "Depressive symptoms", "+"),
    ("Sleep quality", "Perceived stress", "-"),
    ("Depressive symptoms", "Physical activity", "-"),
    ("Social engagement", "Brain health", ""),
]

INTERACTIONS = [
    ("Perceived stress", "Blood pressure", "Brain health", "-"),
]

# Closes Sleep quality -> Perceived stress -> Sleep quality, both auxiliaries.
AUX_LOOP_EXTRA = [("Perceived stress", "Sleep quality", "-")]


def col(i):
    return chr(ord("A") + i)


def sheet_xml(rows, shared):
    out = ['<?xml version="1.0" encoding="UTF-8" standalone="yes"?>',
           '<worksheet xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main"><sheetData>']
    for r, row in enumerate(rows, start=1):
        out.append(f'<row r="{r}">')
        for c, value in enumerate(row):
            ref = f"{col(c)}{r}"
            if value == "":
                continue
            try:
                number = float(value)
                out.append(f'<c r="{ref}"><v>{number:g}</v></c>')
                continue
            except ValueError:
                pass
            if value not in shared:
                shared[value] = len(shared)
            out.append(f'<c r="{ref}" t="s"><v>{shared[value]}</v></c>')
        out.append("</row>")
    out.append("</sheetData></worksheet>")
    return "".join(out)


def write_xlsx(path, sheets):
    shared = {}
    bodies = [(name, sheet_xml(rows, shared)) for name, rows in sheets]
    sst = ['<?xml version="1.0" encoding="UTF-8" standalone="yes"?>',
           f'<sst xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" count="{len(shared)}" '
           f'uniqueCount="{len(shared)}">']
    for text in shared:
        sst.append(f"<si><t>{escape(text)}</t></si>")
    sst.append("</sst>")
    ns = "http://schemas.openxmlformats.org/officeDocument/2006/relationships"
    book = ['<?xml version="1.0" encoding="UTF-8" standalone="yes"?>',
            f'<workbook xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main" xmlns:r="{ns}"><sheets>']
    rels = ['<?xml version="1.0" encoding="UTF-8" standalone="yes"?>',
            '<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">']
    types = ['<?xml version="1.0" encoding="UTF-8" standalone="yes"?>',
             '<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">',
             '<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>',
             '<Default Extension="xml" ContentType="application/xml"/>',
             '<Override PartName="/xl/workbook.xml" '
             'ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml"/>']
    for i, (name, _) in enumerate(bodies, start=1):
        book.append(f'<sheet name="{escape(name)}" sheetId="{i}" r:id="rId{i}"/>')
        rels.append(f'<Relationship Id="rId{i}" Type="{ns}/worksheet" Target="worksheets/sheet{i}.xml"/>')
        types.append(f'<Override PartName="/xl/worksheets/sheet{i}.xml" '
                     'ContentType="application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml"/>')
    n = len(bodies) + 1
    rels.append(f'<Relationship Id="rId{n}" Type="{ns}/sharedStrings" Target="sharedStrings.xml"/>')
    rels.append("</Relationships>")
    book.append("</sheets></workbook>")
    types.append("</Types>")
    root_rels = ('<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
                 '<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">'
                 f'<Relationship Id="rId1" Type="{ns}/officeDocument" Target="xl/workbook.xml"/>'
                 "</Relationships>")
    fixed = (1980, 1, 1, 0, 0, 0)
    with zipfile.ZipFile(path, "w") as z:
        def put(name, text):
            info = zipfile.ZipInfo(name, date_time=fixed)
            info.compress_type = zipfile.ZIP_DEFLATED
            z.writestr(info, text)
        put("[Content_Types].xml", "".join(types))
        put("_rels/.rels", root_rels)
        put("xl/workbook.xml", "".join(book))
        put("xl/_rels/workbook.xml.rels", "".join(rels))
        put("xl/sharedStrings.xml", "".join(sst))
        for i, (_, body) in enumerate(bodies, start=1):
            put(f"xl/worksheets/sheet{i}.xml", body)


def sheets(connections):
    return [
        ("Elements", [("Label", "Type", "Tags", "Description")] + ELEMENTS),
        ("Connections", [("From", "To", "Direction", "Type")] + [(f, t, "directed", p) for f, t, p in connections]),
        ("Interactions", [("From1", "From2", "To", "Type")] + INTERACTIONS),
    ]


def write_csv_dir(path, tables):
    path.mkdir(exist_ok=True)
    for name, rows in tables:
        with open(path / f"{name.lower()}.csv", "w", newline="", encoding="utf-8") as f:
            csv.writer(f).writerows(rows)


def sleep_mood():
    # Sleep (S), mood (M), inflammation (I) are stocks; perceived stress (P)
    # reacts fast and is an auxiliary.
    variables = [
        {"name": "S", "kind": "stock", "intervention_direction": 1, "voi": False},
        {"name": "M", "kind": "stock", "intervention_direction": 0, "voi": True},
        {"name": "I", "kind": "stock", "intervention_direction": -1, "voi": False},
        {"name": "P", "kind": "auxiliary", "intervention_direction": -1, "voi": False},
    ]
    links = [
        {"from": "P", "to": "S", "polarity": "-"},
        {"from": "M", "to": "S", "polarity": "+"},
        {"from": "P", "to": "M", "polarity": "-"},
        {"from": "S", "to": "M", "polarity": "+"},
        {"from": "I", "to": "M", "polarity": "-"},
        {"from": "S", "to": "I", "polarity": "-"},
        {"from": "P", "to": "I", "polarity": "+"},
        {"from": "S", "to": "P", "polarity": "-"},
        {"from": "M", "to": "P", "polarity": "-"},
    ]
    settings = {"base_time_unit_label": "week", "timeframe_units": 20, "theta_max_stock": 0.1,
                "theta_max_aux": 0.3, "samples": 100, "seed": 42}
    return {"variables": variables, "links": links, "interactions": [], "settings": settings}


def main():
    write_xlsx(HERE / "synthetic.xlsx", sheets(CONNECTIONS))
    write_xlsx(HERE / "synthetic_aux_loop.xlsx", sheets(CONNECTIONS + AUX_LOOP_EXTRA))
    write_xlsx(HERE / "synthetic_no_connections.xlsx", sheets(CONNECTIONS)[:1])
    write_csv_dir(HERE / "synthetic_csv", sheets(CONNECTIONS))
    (HERE / "sleep_mood.json").write_text(json.dumps(sleep_mood(), indent=2) + "\n")


if __name__ == "__main__":
    main()
