#!/usr/bin/env python3
"""Regenerates the bundled fixture corpus under tests/fixtures/pipeline.

The corpus is 125 math queries with 4 sampled responses each (500 sample
records) split over two shards, plus the side files the pipeline needs:
benchmark items, reward scores, reference answers, qualification metrics and
two small document sources for mixture composition. Output is fully
determined by SEED.
"""

import json
import os
import random
import sys

SEED = 20240611
QUERIES = 125
ROLLOUTS = 4

OPENERS = [
    "Let us work through this carefully.",
    "We start by writing down what is given.",
    "First, restate the problem in our own words.",
    "A direct computation is enough here.",
    "Consider the structure of the expression before computing.",
    "We proceed step by step.",
    "Begin with the definitions involved.",
    "The key observation comes from simplifying early.",
]

STEPS = [
    "Collect the like terms on each side.",
    "Check the arithmetic of the previous line once more.",
    "Multiplying out gives a cleaner form.",
    "Nothing subtle happens in this step, only bookkeeping.",
    "Substituting back confirms the intermediate value.",
    "Group the constants together and simplify.",
    "We keep track of signs carefully here.",
    "Rewriting the fraction in lowest terms helps.",
    "A quick sanity check with small numbers agrees.",
    "Factor out the common term where possible.",
    "The remaining work is routine algebra.",
    "Compare the result with a rough estimate to be safe.",
]

BENCHMARK_QUESTIONS = [
    "A rectangular garden has a perimeter of 46 meters and an area of 120 square meters. What is the length of its longer side in meters?",
    "How many positive divisors does the number 3600 have in total, counting both 1 and the number itself?",
    "The sum of three consecutive odd integers is 159. What is the largest of these three integers?",
    "A bag holds 5 red marbles and 7 blue marbles. Two marbles are drawn without replacement. What is the probability both are red?",
    "Find the remainder when 2 raised to the power 100 is divided by 7, giving your answer as an integer.",
    "What is the smallest positive integer that leaves remainder 1 when divided by each of 2, 3, 4, 5 and 6?",
    "If the arithmetic mean of five numbers is 18 and four of them are 12, 15, 20 and 25, what is the fifth number?",
    "A train travels 240 kilometers in 3 hours and then 150 kilometers in 2 hours. What is its average speed overall?",
    "Compute the number of ways to arrange the letters of the word BANANA in a row.",
    "The hypotenuse of a right triangle is 25 and one leg is 7. What is the length of the other leg?",
    "Solve for the positive value of t satisfying t squared minus 5 t minus 36 equals zero.",
    "Evaluate the sum of the first fifty positive even integers and report the total.",
]
BENCHMARK_ANSWERS = ["15", "45", "55", "\\frac{5}{33}", "2", "61", "18", "78", "60", "24", "9", "2550"]
CONTAMINATED = {7: 0, 31: 3, 58: 6, 90: 9, 111: 11}  # query index -> benchmark index


def make_problem(rng, k):
    """Returns (prompt, gold, correct_forms, wrong_forms)."""
    kind = k % 6
    if kind == 0:
        a, b = rng.randint(11, 49), rng.randint(11, 49)
        v = a * b
        return (f"Compute {a} \\times {b}.", str(v), [str(v), f"{v}.0"], [str(v + 1), str(v - 10)])
    if kind == 1:
        g = rng.randint(2, 6)
        p, q = rng.choice([(1, 2), (3, 4), (2, 5), (5, 6), (3, 7)])
        num, den = p * g, q * g
        dec = p / q
        correct = [f"\\frac{{{p}}}{{{q}}}", f"\\dfrac{{{p}}}{{{q}}}", f"{p}/{q}"]
        if len(repr(dec)) <= 6:
            correct.append(repr(dec))
        return (f"Simplify the fraction \\frac{{{num}}}{{{den}}}.", f"\\frac{{{p}}}{{{q}}}", correct,
                [f"\\frac{{{p + 1}}}{{{q}}}", f"\\frac{{{num}}}{{{q}}}"])
    if kind == 2:
        c = rng.randint(1, 9)
        gold = f"x^2+{2 * c}x+{c * c}"
        return (f"Expand (x+{c})^2.", gold, [gold, f"{c * c}+{2 * c}x+x^2", f"(x+{c})^2"],
                [f"x^2+{c}x+{c * c}", f"x^2+{c * c}"])
    if kind == 3:
        r1, r2 = sorted(rng.sample(range(1, 10), 2))
        s, p = r1 + r2, r1 * r2
        gold = f"\\{{{r1},{r2}\\}}"
        return (f"Find all real solutions of x^2-{s}x+{p}=0.", gold,
                [gold, f"{r1},{r2}", f"\\{{{r2},{r1}\\}}"], [f"\\{{{r1}\\}}", f"\\{{{r1},{r2 + 1}\\}}"])
    if kind == 4:
        c = rng.randint(2, 20)
        gold = f"({c},\\infty)"
        return (f"Solve the inequality 2x-{2 * c}>0 and give the answer as an interval.", gold,
                [gold, f"\\left({c},\\infty\\right)"], [f"[{c},\\infty)", f"(-\\infty,{c})"])
    a = rng.randint(2, 9)
    b = rng.randint(10, 99)
    v = a + b
    return (f"计算 {a}+{b} 的值。", str(v), [str(v)], [str(v + 2)])


def response_text(rng, answer, style):
    parts = [rng.choice(OPENERS)]
    for _ in range(rng.randint(2, 40)):
        parts.append(rng.choice(STEPS))
        if rng.random() < 0.3:
            parts.append(f"At this point the partial value is {rng.randint(1, 999)}.")
    if answer is None:
        parts.append("I am not able to finish the computation.")
    elif style == 0:
        parts.append(f"Therefore the final result is $\\boxed{{{answer}}}$.")
    elif style == 1:
        parts.append(f"So the answer is {answer}.")
    else:
        parts.append(f"Final check done.\n$x = {answer}$")
    return " ".join(parts)


def main(out_dir):
    rng = random.Random(SEED)
    os.makedirs(out_dir, exist_ok=True)
    samples = []
    gold_lines = []
    for q in range(QUERIES):
        qid = f"q{q + 1:03d}"
        prompt, gold, correct_forms, wrong_forms = make_problem(rng, q)
        if q in CONTAMINATED:
            prompt = BENCHMARK_QUESTIONS[CONTAMINATED[q]] + " " + prompt
        n_correct = rng.choice([0, 1, 2, 2, 3, 3, 4])
        for r in range(ROLLOUTS):
            if r < n_correct:
                answer = rng.choice(correct_forms)
            elif rng.random() < 0.15:
                answer = None
            else:
                answer = rng.choice(wrong_forms)
            style = 2 if answer is not None and q % 6 == 0 and rng.random() < 0.3 else rng.randint(0, 1)
            rec = {"id": f"{qid}#{r}", "prompt": prompt, "response": response_text(rng, answer, style)}
            if q % 40 != 39:
                rec["gold_answer"] = gold
            rec["source"] = "synthetic-rollouts"
            samples.append(rec)
        gold_lines.append({"id": qid, "answer": gold})

    # Exact duplicates: a rollout repeats its sibling word for word.
    for q in (12, 47, 99):
        samples[q * ROLLOUTS + 1]["response"] = samples[q * ROLLOUTS]["response"]
    # Near duplicate: one appended word on an otherwise identical response.
    for q in (23, 71):
        samples[q * ROLLOUTS + 2]["response"] = samples[q * ROLLOUTS + 3]["response"] + " Done"

    scores = [{"id": s["id"], "reward_score": round(rng.random(), 6)} for s in samples]

    half = len(samples) // 2
    shards = [samples[:half], samples[half:]]
    with open(os.path.join(out_dir, "shard-0.jsonl"), "w", encoding="utf-8") as f:
        for s in shards[0]:
            f.write(json.dumps(s, ensure_ascii=False) + "\n")
        f.write('{"id": "broken#0", "prompt": "unterminated\n')
        f.write('{"prompt": "missing id", "response": "42"}\n')
    with open(os.path.join(out_dir, "shard-1.jsonl"), "w", encoding="utf-8") as f:
        for s in shards[1]:
            f.write(json.dumps(s, ensure_ascii=False) + "\n")
        f.write(json.dumps(shards[0][0], ensure_ascii=False) + "\n")

    with open(os.path.join(out_dir, "benchmarks.jsonl"), "w", encoding="utf-8") as f:
        for i, (qtext, ans) in enumerate(zip(BENCHMARK_QUESTIONS, BENCHMARK_ANSWERS)):
            suite = "gsm-style" if i % 2 == 0 else "competition-style"
            f.write(json.dumps({"id": f"bench-{i:02d}", "question": qtext, "answer": ans, "suite": suite}) + "\n")
        f.write(json.dumps({"id": "bench-short", "question": "What is 2+2?", "answer": "4", "suite": "tiny"}) + "\n")

    with open(os.path.join(out_dir, "scores.jsonl"), "w", encoding="utf-8") as f:
        for s in scores:
            f.write(json.dumps(s) + "\n")
    with open(os.path.join(out_dir, "gold.jsonl"), "w", encoding="utf-8") as f:
        for g in gold_lines:
            f.write(json.dumps(g) + "\n")

    for name, topic, n in (("docs-math", "algebra", 40), ("docs-general", "history", 30)):
        with open(os.path.join(out_dir, f"{name}.jsonl"), "w", encoding="utf-8") as f:
            for i in range(n):
                words = [f"{topic}{rng.randint(0, 50)}" for _ in range(rng.randint(8, 30))]
                doc = {"id": f"{name}-{i:03d}", "text": " ".join(words), "lang": "en", "source": name,
                       "quality_score": round(rng.random(), 6)}
                f.write(json.dumps(doc) + "\n")

    metrics = {
        "base.json": {"gsm8k": 0.612, "math500": 0.418, "cmath": 0.705},
        "candidate-round1.json": {"gsm8k": 0.605, "math500": 0.431, "cmath": 0.712},
        "candidate-round2.json": {"gsm8k": 0.618, "math500": 0.433, "cmath": 0.709},
        "shares.json": {"arithmetic": 0.4, "algebra": 0.35, "geometry": 0.25},
    }
    for name, body in metrics.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as f:
            json.dump(body, f, indent=2)
            f.write("\n")

    with open(os.path.join(out_dir, "pipeline.ini"), "w", encoding="utf-8") as f:
        f.write("[filter]\nbucket_width=128\nkeep_quantile=0.5\n\n[decontam]\nn=10\n\n"
                "[dedup]\nthreshold=0.9\n\n[curriculum]\nkind=instruct_rl\nseed=7\n")


if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "..", "tests", "fixtures", "pipeline"))
