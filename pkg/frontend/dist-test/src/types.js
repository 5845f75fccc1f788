export const SCORE_MIN = 0;
export const SCORE_MAX = 5;
/** Score captions shown next to the buttons; 0 is reserved for ungrammatical text. */
export const SCORE_LABELS = {
    0: "ungrammatical",
    1: "not appropriate at all",
    2: "mostly inappropriate",
    3: "borderline",
    4: "mostly appropriate",
    5: "clearly appropriate",
};
