package fixtures.b;

public class Grid {
    private final int rows;
    private final int cols;
    private final int[][] cells;

    public Grid(int rows, int cols) {
        this.rows = rows;
        this.cols = cols;
        this.cells = new int[rows][cols];
    }

    public boolean inBounds(int r, int c) {
        return r >= 0 && r < rows && c >= 0 && c < cols;
    }

    public int countAbove(int threshold) {
        int count = 0;
        for (int r = 0; r < rows; r++) {
            for (int c = 0; c < cols; c++) {
                if (cells[r][c] > threshold) {
                    count++;
                }
            }
        }
        return count;
    }

    public void fillDiagonal(int value) {
        for (int i = 0; i < rows && i < cols; i++) {
            cells[i][i] = value;
        }
    }

    public int at(int r, int c) {
        if (inBounds(r, c)) {
            return cells[r][c];
        }
        throw new IndexOutOfBoundsException("cell");
    }
}
