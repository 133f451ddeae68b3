package fixtures.c;

import java.util.concurrent.Callable;

public class Retry {
    private int attempts;

    public Retry(int attempts) {
        this.attempts = attempts < 1 ? 1 : attempts;
    }

    public <T> T run(Callable<T> task) throws Exception {
        Exception last = null;
        for (int i = 0; i < attempts; i++) {
            try {
                return task.call();
            } catch (Exception e) {
                last = e;
            }
        }
        throw last;
    }

    public int backoffMillis(int attempt) {
        int base = 100;
        int delay = base;
        for (int i = 1; i <= attempt; i++) {
            if (delay < 10000) {
                delay = delay * 2;
            }
        }
        return delay;
    }

    public Runnable asTask(final Runnable body) {
        return new Runnable() {
            @Override
            public void run() {
                int budget = attempts;
                while (budget > 0) {
                    body.run();
                    budget--;
                }
            }
        };
    }
}
