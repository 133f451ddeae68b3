package fixtures.a;

import java.util.ArrayList;
import java.util.List;

public class Buffers {
    private final List<String> chunks = new ArrayList<>();

    public void append(String chunk) {
        if (chunk.length() >= 1) {
            chunks.add(chunk);
        }
    }

    public String joinUpTo(int maxParts) {
        StringBuilder sb = new StringBuilder();
        int i = 0;
        do {
            if (i < chunks.size()) {
                sb.append(chunks.get(i));
            }
            i++;
        } while (i < maxParts);
        return sb.toString();
    }

    public List<String> tail(int from) {
        List<String> out = new ArrayList<String>();
        for (String chunk : chunks) {
            out.add(chunk);
        }
        while (out.size() > from) {
            out.remove(0);
        }
        return out;
    }

    public int totalLength() {
        int total = 0;
        for (int i = 0; i < chunks.size(); i++) {
            total += chunks.get(i).length();
        }
        return total;
    }
}
