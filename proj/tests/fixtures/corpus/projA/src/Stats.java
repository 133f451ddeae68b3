package fixtures.a;

public final class Stats {
    public static double mean(double[] xs) {
        double sum = 0.0;
        for (int i = 0; i < xs.length; i++) {
            sum += xs[i];
        }
        return xs.length == 0 ? 0.0 : sum / xs.length;
    }

    public static double max(double[] xs) {
        double best = Double.NEGATIVE_INFINITY;
        for (double x : xs) {
            if (x > best) {
                best = x;
            }
        }
        return best;
    }

    public static int sign(double x) {
        if (x > 0.0) {
            return 1;
        } else if (x < 0.0) {
            return -1;
        }
        return 0;
    }

    public static double squash(double x) {
        double y = x;
        if (y >= 1.0) {
            y = 1.0;
        }
        if (y <= -1.0) {
            y = -1.0;
        }
        return y;
    }

    public static long fact(long n) {
        long out = 1L;
        while (n > 1L) {
            out *= n;
            n--;
        }
        return out;
    }
}
