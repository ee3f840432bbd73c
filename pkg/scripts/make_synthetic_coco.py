#!/usr/bin/env python3
"""Generate a seeded COCO-style caption file for harness experiments.

Each image gets five paraphrased captions of one underlying scene, so
references agree with each other roughly the way real crowd-sourced captions
do and the word bag is dense enough for replacement perturbations.
"""

import argparse
import json
import random

SUBJECTS = [
    ["a man", "a guy", "a person", "a male"],
    ["a woman", "a lady", "a person", "a female"],
    ["a young boy", "a small boy", "a child", "a kid"],
    ["a girl", "a young girl", "a child", "a kid"],
    ["a dog", "a brown dog", "a puppy", "a small dog"],
    ["a cat", "a black cat", "a kitten", "a small cat"],
    ["a baseball player", "a player", "a batter", "an athlete"],
    ["a group of people", "several people", "some people", "a crowd"],
]
VERBS = [
    ["is riding", "rides", "is sitting on", "sits on"],
    ["is holding", "holds", "is carrying", "carries"],
    ["is eating", "eats", "is biting", "bites"],
    ["is swinging", "swings", "is waving", "waves"],
    ["is throwing", "throws", "is tossing", "tosses"],
    ["is watching", "watches", "is looking at", "looks at"],
]
OBJECTS = [
    ["a bat", "a wooden bat", "a baseball bat", "the bat"],
    ["a ball", "a baseball", "the ball", "a white ball"],
    ["a bicycle", "a bike", "an old bicycle", "the bike"],
    ["a sandwich", "a snack", "some food", "a meal"],
    ["a frisbee", "a disc", "a toy", "the frisbee"],
    ["a kite", "a colorful kite", "the kite", "a toy kite"],
]
PLACES = [
    ["on a field", "in a field", "on the grass", "outdoors"],
    ["in a park", "at the park", "near some trees", "outside"],
    ["on a street", "in the street", "near the road", "downtown"],
    ["at the beach", "near the water", "on the sand", "by the sea"],
    ["in a stadium", "before a crowd", "at a game", "in an arena"],
    ["in a kitchen", "at a table", "indoors", "in a room"],
]


def scene_caption(rng, scene):
    subj, verb, obj, place = (pool[rng.randrange(len(pool))] for pool in scene)
    parts = [subj, verb, obj]
    if rng.random() < 0.85:
        parts.append(place)
    text = " ".join(parts) + "."
    return text[0].upper() + text[1:]


def generate(num_images, seed):
    rng = random.Random(seed)
    images = []
    annotations = []
    ann_id = 1
    for i in range(num_images):
        image_id = 1000 + i
        images.append({"id": image_id})
        scene = (
            SUBJECTS[rng.randrange(len(SUBJECTS))],
            VERBS[rng.randrange(len(VERBS))],
            OBJECTS[rng.randrange(len(OBJECTS))],
            PLACES[rng.randrange(len(PLACES))],
        )
        for _ in range(5):
            annotations.append(
                {"id": ann_id, "image_id": image_id,
                 "caption": scene_caption(rng, scene)}
            )
            ann_id += 1
    return {"images": images, "annotations": annotations}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--images", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    payload = generate(args.images, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=1)
        fh.write("\n")
    print(f"wrote {args.images} images / {len(payload['annotations'])} captions to {args.out}")


if __name__ == "__main__":
    main()
