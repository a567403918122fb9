"""Writes the synthetic gold corpus: <doc>.txt plus <doc>.ann per document.

Sentences carry inline markup [[surface|CLASS|id]]; the markup is stripped
from the text and becomes the gold annotation. Deterministic for a seed.
"""
import random
import re
import sys
from pathlib import Path

SENTENCES = [
    "Paciente en tratamiento con [[warfarina|NORMALIZABLES|2001]] por fibrilación auricular.",
    "Se inicia [[amoxicilina/ácido clavulánico|NORMALIZABLES|2004]] cada 8 horas.",
    "Se pautó [[amoxicilinna|NORMALIZABLES|2002]] por vía oral.",
    "Hemograma sin alteraciones, [[PCR|PROTEINAS|1001]] 12 mg/L.",
    "[[PCR|PROTEINAS|1001]] elevada en la analítica de control y [[urea|NORMALIZABLES|2011]] normal.",
    "La PCR para SARS-CoV-2 fue negativa.",
    "Se solicita PCR de exudado faríngeo.",
    "Función renal: [[urea|NORMALIZABLES|2011]] 45 mg/dL, [[Cr|NORMALIZABLES|2008]] 1,3 mg/dL.",
    "Estudio de metales pesados por exposición laboral: niveles de [[Cr|NORMALIZABLES|2009]] en orina normales.",
    "[[K|NORMALIZABLES|2017]] 3,2 mEq/L tras diuréticos.",
    "Tratamiento con [[cloruro potásico|NORMALIZABLES|2007]] oral.",
    "Se administra colirio de [[ciclopentolato clorhidrato|NORMALIZABLES|2006]] antes de la exploración.",
    "Citometría: blastos con expresión de [[CD-13|PROTEINAS|1005]] y [[CD33|PROTEINAS|1012]].",
    "Marcadores tumorales: [[CEA|PROTEINAS|1004]] y [[CA 19.9|PROTEINAS|1002]] normales.",
    "Ferropenia con [[ferritina|PROTEINAS|1006]] baja; se inicia [[hierro|NORMALIZABLES|2010]] oral.",
    "[[Hemoglobina glicada|PROTEINAS|1013]] del 7,2 %.",
    "Precisa [[insulina|NORMALIZABLES|1009]] rápida.",
    "Recibió tratamiento previo con [[corticoides|NO_NORMALIZABLES|]] y [[antibióticos|NO_NORMALIZABLES|]].",
    "Se canaliza vía y se administra [[suero|UNCLEAR|]] fisiológico.",
    "Refiere dieta rica en calcio.",
    "[[Paracetamol|NORMALIZABLES|2005]] 1 g si dolor.",
    "En tratamiento con [[omeprazol|NORMALIZABLES|2012]] y [[metformina|NORMALIZABLES|2019]].",
    "Déficit de [[vitamina B12|NORMALIZABLES|2014]] y de [[ácido fólico|NORMALIZABLES|2013]].",
    "[[Troponina|PROTEINAS|1010]] negativa en dos determinaciones.",
    "[[Glucosa|NORMALIZABLES|2015]] 110 mg/dL, [[sodio|NORMALIZABLES|2016]] 139 mEq/L.",
    "Se suspende la [[heparina|NORMALIZABLES|2020]] y se reinicia la [[warfarina|NORMALIZABLES|2001]].",
    "[[albúmina|PROTEINAS|1008]] 3,1 g/dL y [[proteína C reactiva|PROTEINAS|1001]] 30 mg/L.",
    "Se pauta [[paracetmol|NORMALIZABLES|2005]] a demanda.",
    "No alergias medicamentosas conocidas.",
    "Hipopotasemia leve: [[K|NORMALIZABLES|2017]] 3,3 mmol/L.",
    "[[Vitamina B-12|NORMALIZABLES|2014]] en rango.",
]

MARKUP = re.compile(r"\[\[([^|\]]+)\|([A-Z_]+)\|([^\]]*)\]\]")


def render(parts):
    text, spans = "", []
    for sentence in parts:
        pos = 0
        for m in MARKUP.finditer(sentence):
            text += sentence[pos:m.start()]
            start = len(text)
            text += m.group(1)
            spans.append((start, len(text), m.group(1), m.group(2), m.group(3)))
            pos = m.end()
        text += sentence[pos:]
    return text, spans


def write_ann(spans):
    spans = sorted(spans)
    lines = [f"T{i}\t{c} {s} {e}\t{surf}" for i, (s, e, surf, c, _) in enumerate(spans, 1)]
    notes = [(i, cid) for i, (_, _, _, _, cid) in enumerate(spans, 1) if cid]
    lines += [f"#{n}\tAnnotatorNotes T{i}\t{cid}" for n, (i, cid) in enumerate(notes, 1)]
    return "".join(line + "\n" for line in lines)


def main(out_dir, docs=50, seed=7):
    rng = random.Random(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for n in range(1, docs + 1):
        picked = rng.sample(SENTENCES, rng.randint(3, 6))
        parts = []
        for i, s in enumerate(picked):
            parts.append(s)
            if i + 1 < len(picked):
                parts.append("\n" if rng.random() < 0.3 else " ")
        text, spans = render(parts)
        text += "\n"
        (out / f"doc{n:02}.txt").write_text(text, encoding="utf-8")
        (out / f"doc{n:02}.ann").write_text(write_ann(spans), encoding="utf-8")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "corpus")
